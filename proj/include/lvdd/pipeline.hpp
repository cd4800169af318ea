#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lvdd/archive_io.hpp"
#include "lvdd/dpp.hpp"
#include "lvdd/error.hpp"
#include "lvdd/hosvd.hpp"
#include "lvdd/rng.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

struct SigmaPolicy {
  SigmaPolicyKind kind = SigmaPolicyKind::median;
  double value = 0.0;  // fixed bandwidth when kind == fixed

  static SigmaPolicy median() { return {}; }
  static SigmaPolicy fixed(double v) { return {SigmaPolicyKind::fixed, v}; }
};

struct DistillConfig {
  std::uint64_t budget_bytes = 0;
  std::uint64_t model_bytes = 0;  // declared size of the external decoder
  double ratio = 0.75;
  SelectionMethod method = SelectionMethod::exact_kdpp;
  SigmaPolicy sigma;
  std::uint64_t master_seed = 0;
  std::optional<std::size_t> instances_per_class;  // nullopt = auto budget search
  Precision precision = Precision::fp32;
  bool standardize = false;  // per-feature standardization before selection

  void validate() const {
    if (!(ratio > 0.0) || ratio > 1.0) throw ValueError("config: ratio must lie in (0, 1]");
    if (budget_bytes <= model_bytes)
      throw ValueError("config: budget_bytes must exceed model_bytes");
    if (sigma.kind == SigmaPolicyKind::fixed && !(sigma.value > 0.0))
      throw ValueError("config: fixed sigma must be positive");
    if (instances_per_class && *instances_per_class == 0)
      throw ValueError("config: instances_per_class must be >= 1");
  }
};

struct ClassMetrics {
  std::uint32_t class_id = 0;
  std::size_t instances = 0;
  double mse = 0.0;
  double rel_frobenius = 0.0;
  double selection_log_prob = 0.0;
  std::uint64_t section_bytes = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  std::uint64_t total_bytes = 0;
  std::uint64_t budget_bytes = 0;
  std::uint64_t model_bytes = 0;
  bool within_budget = false;
  double mse = 0.0;
  double rel_frobenius = 0.0;
  double compression_ratio_vs_raw = 0.0;  // raw fp32 bytes of selection / total_bytes
};

struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t items_per_class = 16;
  std::vector<std::size_t> latent_shape{4, 8, 16, 16};
  double mean_scale = 3.0;     // RMS of the per-class mean field
  double within_scale = 1.0;   // RMS of the per-item smooth variation
  double smoothness = 2.0;     // Gaussian blur sigma along every axis
  double noise_scale = 0.05;   // iid residual on top of the smooth parts
  std::uint64_t seed = 1;

  void validate() const {
    if (num_classes == 0 || items_per_class == 0)
      throw ValueError("synth spec: counts must be positive");
    if (latent_shape.empty()) throw ValueError("synth spec: latent shape must be non-empty");
    for (std::size_t d : latent_shape)
      if (d == 0) throw ValueError("synth spec: zero extent");
  }
};

namespace detail {

inline void smooth_axis(std::vector<double>& data, const std::vector<std::size_t>& shape,
                        std::size_t axis, double sigma) {
  const std::size_t d = shape[axis];
  if (sigma <= 0.0 || d == 1) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    w[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += w[static_cast<std::size_t>(k + radius)];
  }
  for (double& x : w) x /= sum;
  std::size_t lead, trail;
  mode_split(shape, axis, lead, trail);
  std::vector<double> out(data.size());
  for (std::size_t a = 0; a < lead; ++a)
    for (std::size_t i = 0; i < d; ++i) {
      double* dst = out.data() + (a * d + i) * trail;
      for (int k = -radius; k <= radius; ++k) {
        const std::size_t ic = static_cast<std::size_t>(
            std::clamp<long long>(static_cast<long long>(i) + k, 0,
                                  static_cast<long long>(d) - 1));
        const double* src = data.data() + (a * d + ic) * trail;
        const double wk = w[static_cast<std::size_t>(k + radius)];
        for (std::size_t b = 0; b < trail; ++b) dst[b] += wk * src[b];
      }
    }
  data.swap(out);
}

// White Gaussian field blurred along every axis, rescaled to unit RMS.
inline std::vector<double> smooth_field(Rng& rng, const std::vector<std::size_t>& shape,
                                        double sigma) {
  const std::size_t n = shape_product(shape);
  std::vector<double> f(n);
  for (double& v : f) v = rng.next_gaussian();
  for (std::size_t axis = 0; axis < shape.size(); ++axis) smooth_axis(f, shape, axis, sigma);
  double rms = 0.0;
  for (double v : f) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(n));
  if (rms > 1e-300)
    for (double& v : f) v /= rms;
  return f;
}

struct ClassData {
  std::uint32_t class_id = 0;
  std::vector<std::size_t> item_index;  // into dataset.items
  double sigma = 1.0;
  std::optional<SimilarityKernel> kernel;
};

inline std::vector<ClassData> build_class_data(const LatentDataset& d,
                                               const DistillConfig& cfg) {
  std::vector<ClassData> classes(d.num_classes);
  for (std::uint32_t c = 0; c < d.num_classes; ++c) classes[c].class_id = c;
  for (std::size_t i = 0; i < d.items.size(); ++i)
    classes[d.items[i].class_id].item_index.push_back(i);

  for (auto& cd : classes) {
    std::vector<std::vector<double>> points;
    points.reserve(cd.item_index.size());
    for (std::size_t idx : cd.item_index) points.push_back(d.items[idx].tensor.data());
    if (cfg.standardize && points.size() > 1) {
      const std::size_t dim = points[0].size();
      for (std::size_t f = 0; f < dim; ++f) {
        double mean = 0.0;
        for (const auto& p : points) mean += p[f];
        mean /= static_cast<double>(points.size());
        double var = 0.0;
        for (const auto& p : points) var += (p[f] - mean) * (p[f] - mean);
        var /= static_cast<double>(points.size());
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        for (auto& p : points) p[f] = (p[f] - mean) / sd;
      }
    }
    if (points.size() == 1) {
      cd.sigma = cfg.sigma.kind == SigmaPolicyKind::fixed ? cfg.sigma.value : 1.0;
      cd.kernel = SimilarityKernel(Matrix(1, 1, {1.0}), cd.sigma);
    } else {
      cd.sigma = cfg.sigma.kind == SigmaPolicyKind::fixed ? cfg.sigma.value
                                                          : median_heuristic_sigma(points);
      cd.kernel = rbf_kernel(points, cd.sigma);
    }
  }
  return classes;
}

inline Selection select_instances(const ClassData& cd, std::size_t m,
                                  const DistillConfig& cfg) {
  const std::size_t n = cd.kernel->n();
  if (m == n) {
    // The only subset of full cardinality; probability 1 under the k-DPP.
    Selection sel;
    sel.method = cfg.method;
    sel.indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) sel.indices[i] = i;
    sel.log_prob = subset_log_prob(*cd.kernel, sel.indices);
    return sel;
  }
  if (cfg.method == SelectionMethod::greedy_map) return greedy_map(*cd.kernel, m);
  Rng rng(derive_seed(cfg.master_seed, cd.class_id));
  return sample_kdpp(*cd.kernel, m, rng);
}

inline std::uint64_t planned_section_bytes(const std::vector<std::size_t>& stacked_shape,
                                           const DistillConfig& cfg) {
  const std::uint64_t h = hosvd_storage_bytes(stacked_shape, cfg.ratio, cfg.precision);
  const std::uint64_t r = raw_storage_bytes(stacked_shape, cfg.precision);
  return h < r ? h : r;
}

}  // namespace detail

// Deterministic synthetic latent dataset: per class, a smooth mean field
// plus smooth per-item variation and a small iid residual. Values are fp32-
// representable so writing and re-reading a dataset file is lossless.
inline LatentDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  LatentDataset d;
  d.latent_shape = spec.latent_shape;
  d.num_classes = static_cast<std::uint32_t>(spec.num_classes);
  const std::size_t numel = shape_product(spec.latent_shape);
  d.items.reserve(spec.num_classes * spec.items_per_class);
  char idbuf[32];
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Rng rng(derive_seed(spec.seed, c));
    std::vector<double> mean = detail::smooth_field(rng, spec.latent_shape, spec.smoothness);
    for (double& v : mean) v *= spec.mean_scale;
    for (std::size_t i = 0; i < spec.items_per_class; ++i) {
      std::vector<double> within =
          detail::smooth_field(rng, spec.latent_shape, spec.smoothness);
      std::vector<double> z(numel);
      for (std::size_t k = 0; k < numel; ++k) {
        const double v = mean[k] + spec.within_scale * within[k] +
                         spec.noise_scale * rng.next_gaussian();
        z[k] = static_cast<double>(static_cast<float>(v));
      }
      std::snprintf(idbuf, sizeof idbuf, "c%04zu_i%04zu", c, i);
      d.items.push_back(LatentItem{idbuf, static_cast<std::uint32_t>(c),
                                   Tensor(spec.latent_shape, std::move(z))});
    }
  }
  return d;
}

// Per-class DPP selection, HOSVD compression with raw fallback, and exact
// byte accounting against the budget. With instances_per_class unset, the
// largest uniform m is chosen such that every class can supply m instances
// and total_bytes + model_bytes fits the budget (archive size is
// non-decreasing in m; ids of differing lengths may perturb the manifest by
// a few bytes, which the final accounting check still guards).
inline DistilledArchive distill(const LatentDataset& d, const DistillConfig& cfg) {
  cfg.validate();
  d.validate();
  if (d.items.empty()) throw ValueError("distill: dataset is empty");

  std::vector<detail::ClassData> classes = detail::build_class_data(d, cfg);

  std::map<std::size_t, std::vector<Selection>> selection_cache;
  auto selections_for = [&](std::size_t m) -> const std::vector<Selection>& {
    auto it = selection_cache.find(m);
    if (it != selection_cache.end()) return it->second;
    std::vector<Selection> sels;
    sels.reserve(classes.size());
    for (const auto& cd : classes)
      sels.push_back(detail::select_instances(cd, std::min(m, cd.item_index.size()), cfg));
    return selection_cache.emplace(m, std::move(sels)).first->second;
  };

  auto planned_total = [&](std::size_t m) -> std::uint64_t {
    std::uint64_t n = distilled_fixed_bytes(d.latent_shape.size());
    const auto& sels = selections_for(m);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      std::vector<std::string> ids;
      ids.reserve(sels[c].indices.size());
      for (std::size_t k : sels[c].indices)
        ids.push_back(d.items[classes[c].item_index[k]].id);
      std::vector<std::size_t> stacked{sels[c].indices.size()};
      stacked.insert(stacked.end(), d.latent_shape.begin(), d.latent_shape.end());
      n += manifest_entry_bytes(ids) + detail::planned_section_bytes(stacked, cfg);
    }
    return n;
  };

  DistilledArchive a;
  a.config.ratio = cfg.ratio;
  a.config.sigma_kind = cfg.sigma.kind;
  a.config.sigma_value = cfg.sigma.kind == SigmaPolicyKind::fixed ? cfg.sigma.value : 0.0;
  a.config.master_seed = cfg.master_seed;
  a.config.method = cfg.method;
  a.config.precision = cfg.precision;
  a.latent_shape = d.latent_shape;
  a.budget_bytes = cfg.budget_bytes;
  a.model_bytes = cfg.model_bytes;

  std::size_t m_uniform;
  if (cfg.instances_per_class) {
    m_uniform = *cfg.instances_per_class;
    for (const auto& cd : classes)
      if (cd.item_index.size() < m_uniform)
        a.warnings.push_back("class " + std::to_string(cd.class_id) + " has only " +
                             std::to_string(cd.item_index.size()) +
                             " items; taking the whole class");
  } else {
    std::size_t upper = classes[0].item_index.size();
    for (const auto& cd : classes) upper = std::min(upper, cd.item_index.size());
    const std::uint64_t smallest = planned_total(1) + cfg.model_bytes;
    if (smallest > cfg.budget_bytes)
      throw InfeasibleBudgetError(
          "budget of " + std::to_string(cfg.budget_bytes) +
              " bytes cannot fit one instance per class; minimal feasible budget is " +
              std::to_string(smallest) + " bytes",
          smallest);
    std::size_t lo = 1, hi = upper;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      if (planned_total(mid) + cfg.model_bytes <= cfg.budget_bytes)
        lo = mid;
      else
        hi = mid - 1;
    }
    m_uniform = lo;
  }

  const auto& sels = selections_for(m_uniform);
  const std::size_t numel = shape_product(d.latent_shape);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& cd = classes[c];
    const Selection& sel = sels[c];
    const std::size_t m = sel.indices.size();
    std::vector<std::size_t> stacked_shape{m};
    stacked_shape.insert(stacked_shape.end(), d.latent_shape.begin(), d.latent_shape.end());
    std::vector<double> stacked(m * numel);
    ClassSection s;
    s.class_id = cd.class_id;
    s.selection_log_prob = sel.log_prob;
    for (std::size_t k = 0; k < m; ++k) {
      const LatentItem& item = d.items[cd.item_index[sel.indices[k]]];
      s.item_ids.push_back(item.id);
      std::copy(item.tensor.data().begin(), item.tensor.data().end(),
                stacked.begin() + static_cast<std::ptrdiff_t>(k * numel));
    }
    Tensor z(stacked_shape, std::move(stacked));
    const std::uint64_t hosvd_b = hosvd_storage_bytes(stacked_shape, cfg.ratio, cfg.precision);
    const std::uint64_t raw_b = raw_storage_bytes(stacked_shape, cfg.precision);
    if (hosvd_b < raw_b) {
      s.kind = SectionKind::hosvd;
      s.hosvd = hosvd_decompose(z, cfg.ratio);
    } else {
      s.kind = SectionKind::raw;  // factorized form would not be smaller
      s.raw = std::move(z);
    }
    s.byte_length = section_storage_bytes(s, cfg.precision);
    a.sections.push_back(std::move(s));
  }

  a.total_bytes = distilled_archive_file_bytes(a);
  a.within_budget = a.total_bytes + a.model_bytes <= a.budget_bytes;
  if (!a.within_budget)
    throw InfeasibleBudgetError(
        "archive needs " + std::to_string(a.total_bytes + a.model_bytes) +
            " bytes against a budget of " + std::to_string(a.budget_bytes),
        a.total_bytes + a.model_bytes);
  return a;
}

inline LatentDataset decode(const DistilledArchive& a) {
  LatentDataset d;
  d.latent_shape = a.latent_shape;
  std::uint32_t max_class = 0;
  const std::size_t numel = shape_product(a.latent_shape);
  for (const auto& s : a.sections) {
    Tensor stacked;
    switch (s.kind) {
      case SectionKind::raw: stacked = s.raw; break;
      case SectionKind::hosvd: stacked = hosvd_reconstruct(s.hosvd); break;
      case SectionKind::svd: stacked = svd_reconstruct(s.svd); break;
    }
    const std::size_t m = stacked.extent(0);
    if (s.item_ids.size() != m)
      throw IntegrityError("manifest ids do not match section instances");
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> item(stacked.data().begin() + static_cast<std::ptrdiff_t>(i * numel),
                               stacked.data().begin() +
                                   static_cast<std::ptrdiff_t>((i + 1) * numel));
      d.items.push_back(LatentItem{s.item_ids[i], s.class_id,
                                   Tensor(a.latent_shape, std::move(item))});
    }
    max_class = std::max(max_class, s.class_id);
  }
  d.num_classes = a.sections.empty() ? 0 : max_class + 1;
  return d;
}

inline MetricsReport evaluate(const LatentDataset& original, const LatentDataset& decoded,
                              const DistilledArchive& archive) {
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(original.items.size());
  for (std::size_t i = 0; i < original.items.size(); ++i)
    by_id.emplace(original.items[i].id, i);

  struct Acc {
    double sq_diff = 0.0, sq_orig = 0.0;
    std::size_t count = 0;
  };
  std::map<std::uint32_t, Acc> per_class;
  double sq_diff_total = 0.0, sq_orig_total = 0.0;
  std::size_t items_total = 0;
  const std::size_t numel = shape_product(decoded.latent_shape);

  for (const auto& it : decoded.items) {
    auto found = by_id.find(it.id);
    if (found == by_id.end())
      throw ValueError("decoded item '" + it.id + "' is not present in the original dataset");
    const LatentItem& orig = original.items[found->second];
    if (orig.class_id != it.class_id)
      throw ValueError("decoded item '" + it.id + "' has a different class than the original");
    Acc& acc = per_class[it.class_id];
    for (std::size_t k = 0; k < numel; ++k) {
      const double diff = orig.tensor[k] - it.tensor[k];
      acc.sq_diff += diff * diff;
      acc.sq_orig += orig.tensor[k] * orig.tensor[k];
    }
    acc.count += 1;
    items_total += 1;
  }

  MetricsReport r;
  r.budget_bytes = archive.budget_bytes;
  r.model_bytes = archive.model_bytes;
  r.total_bytes = archive.total_bytes ? archive.total_bytes
                                      : distilled_archive_file_bytes(archive);
  r.within_budget = r.total_bytes + r.model_bytes <= r.budget_bytes;

  std::uint64_t raw_selected_bytes = 0;
  for (const auto& s : archive.sections) {
    const Acc& acc = per_class[s.class_id];
    ClassMetrics cm;
    cm.class_id = s.class_id;
    cm.instances = s.item_ids.size();
    cm.mse = acc.count ? acc.sq_diff / (static_cast<double>(acc.count) * numel) : 0.0;
    cm.rel_frobenius = acc.sq_orig > 0.0 ? std::sqrt(acc.sq_diff / acc.sq_orig)
                                         : (acc.sq_diff > 0.0 ? INFINITY : 0.0);
    cm.selection_log_prob = s.selection_log_prob;
    cm.section_bytes = s.byte_length ? s.byte_length
                                     : section_storage_bytes(s, archive.config.precision);
    sq_diff_total += acc.sq_diff;
    sq_orig_total += acc.sq_orig;
    raw_selected_bytes += 4ull * s.item_ids.size() * numel;
    r.per_class.push_back(cm);
  }
  r.mse = items_total ? sq_diff_total / (static_cast<double>(items_total) * numel) : 0.0;
  r.rel_frobenius = sq_orig_total > 0.0 ? std::sqrt(sq_diff_total / sq_orig_total)
                                        : (sq_diff_total > 0.0 ? INFINITY : 0.0);
  r.compression_ratio_vs_raw =
      r.total_bytes ? static_cast<double>(raw_selected_bytes) / r.total_bytes : 0.0;
  return r;
}

}  // namespace lvdd
