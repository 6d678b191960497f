#include "afenet/param_store.hpp"

#include <cmath>

#include "afenet/error.hpp"

namespace afenet {

Var ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (params_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  Var v = Var::leaf(std::move(init), trainable);
  params_.emplace(name, v);
  trainable_.emplace(name, trainable);
  return v;
}

const Var& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw NotFound("no parameter named " + name);
  return it->second;
}

Var& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw NotFound("no parameter named " + name);
  return it->second;
}

std::int64_t ParamStore::scalar_count() const {
  std::int64_t total = 0;
  for (const auto& [name, v] : params_) total += v.value().numel();
  return total;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, v] : params_) out.push_back(name);
  return out;
}

std::vector<Var> ParamStore::trainable() const {
  std::vector<Var> out;
  for (const auto& [name, v] : params_) {
    if (trainable_.at(name)) out.push_back(v);
  }
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : params_) v.zero_grad();
}

void ParamStore::assign(const std::string& name, const Tensor& value) {
  Var& v = at(name);
  if (v.shape() != value.shape()) {
    throw ShapeError("parameter " + name + " has shape " + v.shape().str() + ", got " +
                     value.shape().str());
  }
  v.mutable_value() = value;
}

Tensor uniform_fan_in(Shape shape, std::int64_t fan_in, Rng& rng) {
  Tensor t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace afenet
