#include "grad_suite.hpp"

#include <array>
#include <memory>

#include "afenet/fam.hpp"
#include "afenet/fdm.hpp"
#include "afenet/fem.hpp"
#include "afenet/model.hpp"

namespace afenet::testing {

namespace {

using Leaves = std::vector<Var>;

Var leaf(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Var::leaf(random_tensor(s, rng, lo, hi));
}

/// Case over freshly drawn leaves; `build` returns the leaves and the forward.
GradCase make_case(std::string name,
                   std::function<std::pair<Leaves, std::function<Var()>>(Rng&)> build) {
  return {name, [name, build](const GradCheckOptions& opt) {
            Rng rng(mix_seed(opt.seed + 17));
            auto [leaves, f] = build(rng);
            return gradcheck(name, f, leaves, opt);
          }};
}

Leaves with_params(const ParamStore& store, Leaves extra) {
  for (const auto& [name, v] : store.entries()) extra.push_back(v);
  return extra;
}

FemBlockConfig small_fem() {
  FemBlockConfig c;
  c.channels = 4;
  c.heads = 2;
  c.expansion = 2.66;
  c.blocks_per_band = 2;
  return c;
}

GradCase module_case(std::string name,
                     std::function<std::function<Var()>(ParamStore&, Rng&, Leaves&)> build) {
  return {name, [name, build](const GradCheckOptions& opt) {
            Rng rng(mix_seed(opt.seed + 31));
            auto store = std::make_shared<ParamStore>();
            Leaves inputs;
            auto f = build(*store, rng, inputs);
            return gradcheck(name, [store, f] { return f(); }, with_params(*store, inputs), opt);
          }};
}

/// Scalar <w_h, high> + <w_m, mid> + <w_l, low> with fixed random weights,
/// so every band element gets an independent cotangent.
Var flatten_bands(const BandSet& b) {
  Rng rng(99);
  Var total;
  for (const Var* band : {&b.high, &b.mid, &b.low}) {
    const Var term = ops::dot(*band, random_tensor(band->shape(), rng));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total;
}

}  // namespace

std::vector<GradCase> op_gradient_cases() {
  std::vector<GradCase> cases;
  const Shape s{2, 3, 4, 5};

  cases.push_back(make_case("add", [s](Rng& r) {
    Var a = leaf(s, r), b = leaf(s, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] { return ops::add(a, b); })};
  }));
  cases.push_back(make_case("sub", [s](Rng& r) {
    Var a = leaf(s, r), b = leaf(s, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] { return ops::sub(a, b); })};
  }));
  cases.push_back(make_case("mul", [s](Rng& r) {
    Var a = leaf(s, r), b = leaf(s, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] { return ops::mul(a, b); })};
  }));
  cases.push_back(make_case("scale", [s](Rng& r) {
    Var a = leaf(s, r);
    return std::pair{Leaves{a}, std::function<Var()>([=] { return ops::scale(a, -1.7); })};
  }));
  struct ConvSpec {
    const char* name;
    Shape x;
    std::int64_t cout;
    int k, stride;
    bool bias;
  };
  for (const ConvSpec& c : {ConvSpec{"conv2d_k3_s1", {2, 3, 6, 7}, 4, 3, 1, true},
                            ConvSpec{"conv2d_k3_s2", {1, 3, 7, 6}, 4, 3, 2, true},
                            ConvSpec{"conv2d_k1", {2, 5, 4, 4}, 3, 1, 1, true},
                            ConvSpec{"conv2d_k5_nobias", {1, 2, 6, 5}, 3, 5, 1, false}}) {
    cases.push_back(make_case(c.name, [c](Rng& r) {
      Var x = leaf(c.x, r), w = leaf(Shape{c.cout, c.x.c, c.k, c.k}, r);
      Var b = c.bias ? leaf(Shape{c.cout, 1, 1, 1}, r) : Var();
      Leaves l{x, w};
      if (c.bias) l.push_back(b);
      return std::pair{l, std::function<Var()>([=] { return ops::conv2d(x, w, b, c.stride); })};
    }));
  }
  for (const ConvSpec& c : {ConvSpec{"depthwise_k3_s1", {2, 3, 6, 7}, 3, 3, 1, true},
                            ConvSpec{"depthwise_k3_s2", {1, 4, 7, 6}, 4, 3, 2, true},
                            ConvSpec{"depthwise_k5_nobias", {1, 3, 6, 6}, 3, 5, 1, false}}) {
    cases.push_back(make_case(c.name, [c](Rng& r) {
      Var x = leaf(c.x, r), w = leaf(Shape{c.x.c, 1, c.k, c.k}, r);
      Var b = c.bias ? leaf(Shape{c.x.c, 1, 1, 1}, r) : Var();
      Leaves l{x, w};
      if (c.bias) l.push_back(b);
      return std::pair{l, std::function<Var()>(
                              [=] { return ops::depthwise_conv2d(x, w, b, c.stride); })};
    }));
  }
  cases.push_back(make_case("resize_bilinear_down", [](Rng& r) {
    Var x = leaf(Shape{2, 3, 5, 7}, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::resize_bilinear(x, 3, 4); })};
  }));
  cases.push_back(make_case("resize_bilinear_up", [](Rng& r) {
    Var x = leaf(Shape{2, 3, 4, 5}, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::resize_bilinear(x, 7, 9); })};
  }));
  for (int f : {2, 4}) {
    cases.push_back(make_case("upsample_bilinear_x" + std::to_string(f), [f](Rng& r) {
      Var x = leaf(Shape{2, 3, 4, 5}, r);
      return std::pair{Leaves{x},
                       std::function<Var()>([=] { return ops::upsample_bilinear(x, f); })};
    }));
  }
  cases.push_back(make_case("layer_norm", [](Rng& r) {
    Var x = leaf(Shape{2, 4, 4, 4}, r), g = leaf(Shape{4, 1, 1, 1}, r, 0.5, 1.5),
        b = leaf(Shape{4, 1, 1, 1}, r);
    return std::pair{Leaves{x, g, b}, std::function<Var()>([=] { return ops::layer_norm(x, g, b); })};
  }));
  cases.push_back(make_case("gelu", [s](Rng& r) {
    Var x = leaf(s, r, -3.0, 3.0);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::gelu(x); })};
  }));
  cases.push_back(make_case("sigmoid", [s](Rng& r) {
    Var x = leaf(s, r, -4.0, 4.0);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::sigmoid(x); })};
  }));
  for (int axis : {2, 3}) {
    cases.push_back(make_case("softmax_axis" + std::to_string(axis), [s, axis](Rng& r) {
      Var x = leaf(s, r, -2.0, 2.0);
      return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::softmax(x, axis); })};
    }));
  }
  cases.push_back(make_case("l2_normalize", [s](Rng& r) {
    Var x = leaf(s, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::l2_normalize(x); })};
  }));
  cases.push_back(make_case("matmul", [](Rng& r) {
    Var a = leaf(Shape{2, 2, 4, 5}, r), b = leaf(Shape{2, 2, 5, 3}, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] { return ops::matmul(a, b); })};
  }));
  cases.push_back(make_case("transpose", [s](Rng& r) {
    Var x = leaf(s, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::transpose(x); })};
  }));
  cases.push_back(make_case("reshape", [s](Rng& r) {
    Var x = leaf(s, r);
    return std::pair{Leaves{x},
                     std::function<Var()>([=] { return ops::reshape(x, Shape{1, 6, 2, 10}); })};
  }));
  cases.push_back(make_case("divide_channels", [s](Rng& r) {
    Var x = leaf(s, r), d = leaf(Shape{3, 1, 1, 1}, r, 0.5, 2.0);
    return std::pair{Leaves{x, d}, std::function<Var()>([=] { return ops::divide_channels(x, d); })};
  }));
  cases.push_back(make_case("concat_channels", [](Rng& r) {
    Var a = leaf(Shape{2, 2, 4, 5}, r), b = leaf(Shape{2, 3, 4, 5}, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] {
                       const std::array<Var, 2> parts{a, b};
                       return ops::concat_channels(parts);
                     })};
  }));
  cases.push_back(make_case("slice_channels", [](Rng& r) {
    Var x = leaf(Shape{2, 5, 4, 5}, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::slice_channels(x, 1, 3); })};
  }));
  cases.push_back(make_case("adaptive_max_pool", [](Rng& r) {
    Var x = leaf(Shape{2, 3, 9, 7}, r);
    return std::pair{Leaves{x},
                     std::function<Var()>([=] { return ops::adaptive_max_pool(x, 4, 3); })};
  }));
  cases.push_back(make_case("avg_pool", [](Rng& r) {
    Var x = leaf(Shape{2, 3, 4, 6}, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::avg_pool(x, 2); })};
  }));
  cases.push_back(make_case("l1_loss", [s](Rng& r) {
    Var a = leaf(s, r), b = leaf(s, r);
    return std::pair{Leaves{a, b}, std::function<Var()>([=] { return ops::l1_loss(a, b); })};
  }));
  cases.push_back(make_case("dot", [s](Rng& r) {
    Var x = leaf(s, r);
    Tensor w = random_tensor(s, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::dot(x, w); })};
  }));
  cases.push_back(make_case("sum", [s](Rng& r) {
    Var x = leaf(s, r);
    return std::pair{Leaves{x}, std::function<Var()>([=] { return ops::sum(x); })};
  }));
  for (Band band : {Band::low, Band::mid, Band::high}) {
    cases.push_back(make_case(std::string("dct_band_filter_") + band_name(band), [band](Rng& r) {
      Var x = leaf(Shape{1, 2, 8, 8}, r);
      return std::pair{Leaves{x}, std::function<Var()>([=] { return dct_band_filter(x, band); })};
    }));
  }
  return cases;
}

std::vector<GradCase> module_gradient_cases() {
  std::vector<GradCase> cases;
  for (bool l2 : {true, false}) {
    cases.push_back(module_case(l2 ? "mdta" : "mdta_unnormalized",
                                [l2](ParamStore& st, Rng& r, Leaves& in) {
      auto cfg = small_fem();
      cfg.attention_l2norm = l2;
      auto m = std::make_shared<ChannelAttention>(st, "mdta", cfg, false, r);
      Var x = leaf(Shape{2, 4, 6, 6}, r);
      in.push_back(x);
      return std::function<Var()>([m, x] { return (*m)(x); });
    }));
  }
  cases.push_back(module_case("gdfn", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<GatedFeedForward>(st, "gdfn", small_fem(), false, r);
    Var x = leaf(Shape{2, 4, 5, 5}, r);
    in.push_back(x);
    return std::function<Var()>([m, x] { return (*m)(x); });
  }));
  cases.push_back(module_case("enhance_branch", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<EnhanceBranch>(st, "branch", small_fem(), false, r);
    Var x = leaf(Shape{1, 4, 6, 6}, r);
    in.push_back(x);
    return std::function<Var()>([m, x] { return (*m)(x); });
  }));
  for (std::int64_t size : {8, 3}) {
    cases.push_back(module_case("pyramid_attention_" + std::to_string(size),
                                [size](ParamStore& st, Rng& r, Leaves& in) {
      auto m = std::make_shared<PyramidAttention>(st, "pa", 4, false, r);
      Var x = leaf(Shape{2, 4, size, size}, r);
      in.push_back(x);
      return std::function<Var()>([m, x] { return (*m)(x); });
    }));
  }
  struct Inter {
    const char* name;
    CombineMode mode;
    bool interaction;
  };
  for (const Inter& spec : {Inter{"interaction_concat", CombineMode::concat_project, true},
                            Inter{"interaction_multiply", CombineMode::multiply, true},
                            Inter{"interaction_disabled", CombineMode::concat_project, false}}) {
    cases.push_back(module_case(spec.name, [spec](ParamStore& st, Rng& r, Leaves& in) {
      auto cfg = small_fem();
      cfg.blocks_per_band = 1;
      auto m = std::make_shared<CrossBandEnhancement>(st, "fem", cfg, spec.mode, spec.interaction,
                                                      false, r);
      Var h = leaf(Shape{1, 4, 8, 8}, r), md = leaf(Shape{1, 4, 4, 4}, r),
          l = leaf(Shape{1, 4, 2, 2}, r);
      in = {h, md, l};
      return std::function<Var()>([m, h, md, l] { return flatten_bands((*m)(BandSet{h, md, l})); });
    }));
  }
  cases.push_back(module_case("frequency_decomposition", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<FrequencyDecomposition>(st, "fdm", 3, 4, r);
    Var x = leaf(Shape{1, 3, 8, 8}, r, 0.0, 1.0);
    in.push_back(x);
    return std::function<Var()>([m, x] { return flatten_bands(m->decompose(x)); });
  }));
  cases.push_back(module_case("dct_decomposition", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<DctDecomposition>(st, "dct", 3, 4, r);
    Var x = leaf(Shape{1, 3, 8, 8}, r, 0.0, 1.0);
    in.push_back(x);
    return std::function<Var()>([m, x] { return flatten_bands(m->decompose(x)); });
  }));
  cases.push_back(module_case("merge_bands", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<BandMerge>(st, "merge", 4, r);
    Var h = leaf(Shape{1, 4, 8, 8}, r), md = leaf(Shape{1, 4, 4, 4}, r),
        l = leaf(Shape{1, 4, 2, 2}, r);
    in = {h, md, l};
    return std::function<Var()>([m, h, md, l] { return (*m)(BandSet{h, md, l}); });
  }));
  cases.push_back(module_case("fam_block", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<FamBlock>(st, "fam", 4, 4, std::vector<std::int64_t>{2, 4, 8}, false, r);
    Var x = leaf(Shape{2, 4, 8, 8}, r);
    in.push_back(x);
    return std::function<Var()>([m, x] { return (*m)(x); });
  }));
  cases.push_back(module_case("aggregate", [](ParamStore& st, Rng& r, Leaves& in) {
    auto m = std::make_shared<FrequencyAggregation>(st, "fam", 4, 2, std::vector<std::int64_t>{2},
                                                    2, false, r);
    Var h = leaf(Shape{1, 4, 8, 8}, r), md = leaf(Shape{1, 4, 4, 4}, r),
        l = leaf(Shape{1, 4, 2, 2}, r);
    in = {h, md, l};
    return std::function<Var()>([m, h, md, l] { return (*m)(BandSet{h, md, l}); });
  }));

  struct ModelSpec {
    const char* name;
    Variant variant;
    CombineMode combine;
  };
  for (const ModelSpec& spec : {ModelSpec{"model_full", Variant::full, CombineMode::concat_project},
                                ModelSpec{"model_full_multiply", Variant::full, CombineMode::multiply},
                                ModelSpec{"model_S1", Variant::S1, CombineMode::concat_project},
                                ModelSpec{"model_S2", Variant::S2, CombineMode::concat_project},
                                ModelSpec{"model_S3", Variant::S3, CombineMode::concat_project},
                                ModelSpec{"model_S4", Variant::S4, CombineMode::concat_project}}) {
    cases.push_back({spec.name, [spec](const GradCheckOptions& opt) {
                       ModelConfig cfg;
                       cfg.channels = 4;
                       cfg.heads = 2;
                       cfg.blocks_per_band = 1;
                       cfg.fam_splits = 2;
                       cfg.fam_scales = {2};
                       cfg.fam_depth = 1;
                       cfg.variant = spec.variant;
                       cfg.combine = spec.combine;
                       cfg.zero_init_residual = false;
                       cfg.zero_init_head = false;
                       cfg.init_seed = 5;
                       auto model = std::make_shared<Afenet>(cfg);
                       Rng r(mix_seed(opt.seed + 47));
                       Var x = Var::leaf(random_tensor(Shape{1, 3, 8, 8}, r, 0.0, 1.0));
                       return gradcheck(spec.name, [model, x] { return model->forward(x); },
                                        with_params(model->params(), {x}), opt);
                     }});
  }
  return cases;
}

}  // namespace afenet::testing
