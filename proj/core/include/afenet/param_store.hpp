#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afenet/autograd.hpp"
#include "afenet/rng.hpp"

namespace afenet {

/// Named trainable arrays, keyed by dotted hierarchical names
/// ("fem.mid.block0.mdta.qkv.weight"). Iteration order is lexicographic,
/// which is also the checkpoint order.
class ParamStore {
 public:
  /// Registers a new parameter; names must be unique.
  Var add(const std::string& name, Tensor init, bool trainable = true);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Var& at(const std::string& name) const;
  Var& at(const std::string& name);

  std::size_t size() const { return params_.size(); }
  std::int64_t scalar_count() const;
  std::vector<std::string> names() const;

  /// Trainable parameters in name order.
  std::vector<Var> trainable() const;

  void zero_grad();

  const std::map<std::string, Var>& entries() const { return params_; }

  /// Load values by name; every name must exist with an identical shape.
  void assign(const std::string& name, const Tensor& value);

 private:
  std::map<std::string, Var> params_;
  std::map<std::string, bool> trainable_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual convolution default.
Tensor uniform_fan_in(Shape shape, std::int64_t fan_in, Rng& rng);

}  // namespace afenet
