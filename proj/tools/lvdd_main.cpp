// lvdd command-line tool: synthesize latent datasets, distill them into
// budgeted archives, decode, score, quantize tensor archives, and sweep
// rank compression ratios.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "lvdd/lvdd.hpp"

namespace {

using nlohmann::json;

constexpr std::uint64_t kMiB = 1ull << 20;  // 1 MB == 2^20 bytes throughout

std::vector<std::size_t> parse_shape(const std::string& s) {
  std::vector<std::size_t> shape;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, 'x')) {
    const long v = std::stol(tok);
    if (v <= 0) throw lvdd::ValueError("shape extents must be positive: " + s);
    shape.push_back(static_cast<std::size_t>(v));
  }
  if (shape.empty()) throw lvdd::ValueError("empty shape: " + s);
  return shape;
}

std::vector<double> parse_ratios(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw lvdd::ValueError("empty ratio list");
  return out;
}

lvdd::SelectionMethod parse_method(const std::string& m) {
  if (m == "kdpp") return lvdd::SelectionMethod::exact_kdpp;
  if (m == "greedy") return lvdd::SelectionMethod::greedy_map;
  throw lvdd::ValueError("unknown selection method '" + m + "' (expected kdpp|greedy)");
}

std::uint64_t mb_to_bytes(double mb) {
  if (mb < 0) throw lvdd::ValueError("megabyte values must be non-negative");
  return static_cast<std::uint64_t>(std::llround(mb * static_cast<double>(kMiB)));
}

std::size_t min_class_population(const lvdd::LatentDataset& d) {
  std::vector<std::size_t> pop(d.num_classes, 0);
  for (const auto& it : d.items) ++pop[it.class_id];
  std::size_t m = d.items.size();
  for (std::size_t p : pop) m = std::min(m, p);
  return m;
}

json metrics_json(const lvdd::MetricsReport& r) {
  json j;
  j["schema"] = "lvdd-metrics-v1";
  j["total_bytes"] = r.total_bytes;
  j["budget_bytes"] = r.budget_bytes;
  j["model_bytes"] = r.model_bytes;
  j["within_budget"] = r.within_budget;
  j["mse"] = r.mse;
  j["rel_frobenius"] = r.rel_frobenius;
  j["compression_ratio_vs_raw"] = r.compression_ratio_vs_raw;
  j["per_class"] = json::array();
  for (const auto& c : r.per_class) {
    j["per_class"].push_back({{"class_id", c.class_id},
                              {"instances", c.instances},
                              {"mse", c.mse},
                              {"rel_frobenius", c.rel_frobenius},
                              {"selection_log_prob", c.selection_log_prob},
                              {"section_bytes", c.section_bytes}});
  }
  return j;
}

const char* dtype_name(lvdd::ArchiveDtype d) {
  switch (d) {
    case lvdd::ArchiveDtype::fp32: return "fp32";
    case lvdd::ArchiveDtype::fp16: return "fp16";
    case lvdd::ArchiveDtype::int8_affine: return "int8_affine";
  }
  return "?";
}

json quant_report_json(const lvdd::QuantReport& r) {
  json j;
  j["schema"] = "lvdd-quant-report-v1";
  j["payload_ratio"] = r.payload_ratio;
  j["total_ratio"] = r.total_ratio;
  j["int8_param_fraction"] = r.int8_param_fraction;
  j["params_total"] = r.params_total;
  j["params_int8"] = r.params_int8;
  j["fp32_payload_bytes"] = r.fp32_payload_bytes;
  j["quant_payload_bytes"] = r.quant_payload_bytes;
  j["fp32_file_bytes"] = r.fp32_file_bytes;
  j["quant_file_bytes"] = r.quant_file_bytes;
  j["per_tensor"] = json::array();
  for (const auto& t : r.per_tensor) {
    j["per_tensor"].push_back({{"name", t.name},
                               {"dtype", dtype_name(t.dtype)},
                               {"params", t.params},
                               {"fp32_payload_bytes", t.fp32_payload_bytes},
                               {"quant_payload_bytes", t.quant_payload_bytes},
                               {"payload_ratio", t.payload_ratio}});
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"latent tensor dataset distillation: DPP selection, HOSVD compression, "
               "budgeted archives"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic latent dataset");
  std::size_t g_classes = 10, g_per_class = 16;
  std::string g_shape = "4x8x16x16", g_out;
  std::uint64_t g_seed = 1;
  double g_mean = 3.0, g_within = 1.0, g_smooth = 2.0, g_noise = 0.05;
  gen->add_option("--classes", g_classes, "number of classes")->capture_default_str();
  gen->add_option("--per-class", g_per_class, "items per class")->capture_default_str();
  gen->add_option("--shape", g_shape, "per-item latent shape, e.g. CxTxHxW")
      ->capture_default_str();
  gen->add_option("--seed", g_seed, "generator seed")->capture_default_str();
  gen->add_option("--mean-scale", g_mean, "RMS of the class mean field")->capture_default_str();
  gen->add_option("--within-scale", g_within, "RMS of per-item smooth variation")
      ->capture_default_str();
  gen->add_option("--smoothness", g_smooth, "Gaussian blur sigma along each axis")
      ->capture_default_str();
  gen->add_option("--noise", g_noise, "iid residual scale")->capture_default_str();
  gen->add_option("-o,--output", g_out, "output .lvdd path")->required();

  // distill
  auto* dis = app.add_subcommand("distill", "distill a dataset into a budgeted archive");
  std::string d_in, d_out, d_method = "kdpp";
  double d_budget_mb = 0, d_model_mb = 0, d_ratio = 0.75, d_sigma = 0;
  std::uint64_t d_seed = 0;
  std::size_t d_per_class = 0;
  bool d_fp16 = false, d_standardize = false;
  dis->add_option("-i,--input", d_in, "input .lvdd dataset")->required();
  dis->add_option("--budget-mb", d_budget_mb, "total storage budget in MB (2^20 bytes)")
      ->required();
  dis->add_option("--model-mb", d_model_mb, "declared external decoder size in MB")
      ->capture_default_str();
  dis->add_option("--ratio", d_ratio, "rank compression ratio in (0,1]")->capture_default_str();
  dis->add_option("--method", d_method, "selection method: kdpp|greedy")->capture_default_str();
  dis->add_option("--seed", d_seed, "master seed for k-DPP sampling")->capture_default_str();
  dis->add_option("--per-class", d_per_class,
                  "instances per class (omit for automatic budget search)");
  dis->add_option("--sigma", d_sigma, "fixed RBF bandwidth (default: per-class median)");
  dis->add_flag("--fp16", d_fp16, "store archive payloads as fp16 instead of fp32");
  dis->add_flag("--standardize", d_standardize, "standardize features before selection");
  dis->add_option("-o,--output", d_out, "output .dar path")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "reconstruct latents from an archive");
  std::string c_in, c_out;
  dec->add_option("-i,--input", c_in, "input .dar archive")->required();
  dec->add_option("-o,--output", c_out, "output .lvdd path")->required();

  // metrics
  auto* met = app.add_subcommand("metrics", "score a decoded dataset against the original");
  std::string m_orig, m_dec, m_arch, m_json;
  met->add_option("--original", m_orig, "original .lvdd dataset")->required();
  met->add_option("--decoded", m_dec, "decoded .lvdd dataset")->required();
  met->add_option("--archive", m_arch, "the .dar archive that produced it")->required();
  met->add_option("--json", m_json, "write the JSON report here (default: stdout)");

  // quantize
  auto* qnt = app.add_subcommand("quantize", "quantize a tensor archive");
  std::string q_in, q_out, q_policy = "fc-int8-rest-fp16", q_pattern;
  bool q_report = false;
  qnt->add_option("-i,--input", q_in, "input .tar tensor archive")->required();
  qnt->add_option("--policy", q_policy, "quantization policy")->capture_default_str();
  qnt->add_option("--fc-pattern", q_pattern,
                  "regex overriding the rank-2 fully-connected predicate");
  qnt->add_flag("--report", q_report, "print a JSON compression report to stdout");
  qnt->add_option("-o,--output", q_out, "output .tar path")->required();

  // sweep
  auto* swp = app.add_subcommand("sweep", "distill across a ratio grid, emit CSV");
  std::string s_in, s_out, s_ratios = "0.1,0.25,0.5,0.75,1.0", s_method = "kdpp";
  double s_budget_mb = 0, s_model_mb = 0, s_sigma = 0;
  std::uint64_t s_seed = 0;
  std::size_t s_per_class = 0;
  swp->add_option("-i,--input", s_in, "input .lvdd dataset")->required();
  swp->add_option("--ratios", s_ratios, "comma-separated rank compression ratios")
      ->capture_default_str();
  swp->add_option("--per-class", s_per_class,
                  "instances per class (default: smallest class population)");
  swp->add_option("--method", s_method, "selection method: kdpp|greedy")->capture_default_str();
  swp->add_option("--seed", s_seed, "master seed")->capture_default_str();
  swp->add_option("--budget-mb", s_budget_mb, "optional budget in MB (default: unconstrained)");
  swp->add_option("--model-mb", s_model_mb, "declared decoder size in MB")
      ->capture_default_str();
  swp->add_option("--sigma", s_sigma, "fixed RBF bandwidth (default: per-class median)");
  swp->add_option("-o,--output", s_out, "output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the message or help text
    return rc == 0 ? 0 : 4;     // flag errors are bad input
  }

  if (gen->parsed()) {
    lvdd::SynthSpec spec;
    spec.num_classes = g_classes;
    spec.items_per_class = g_per_class;
    spec.latent_shape = parse_shape(g_shape);
    spec.mean_scale = g_mean;
    spec.within_scale = g_within;
    spec.smoothness = g_smooth;
    spec.noise_scale = g_noise;
    spec.seed = g_seed;
    lvdd::LatentDataset d = lvdd::generate_synthetic(spec);
    lvdd::write_latent_dataset(d, g_out);
    std::cout << "wrote " << d.items.size() << " items (" << d.num_classes << " classes) to "
              << g_out << "\n";
    return 0;
  }

  if (dis->parsed()) {
    lvdd::LatentDataset d = lvdd::read_latent_dataset(d_in);
    lvdd::DistillConfig cfg;
    cfg.budget_bytes = mb_to_bytes(d_budget_mb);
    cfg.model_bytes = mb_to_bytes(d_model_mb);
    cfg.ratio = d_ratio;
    cfg.method = parse_method(d_method);
    cfg.master_seed = d_seed;
    cfg.precision = d_fp16 ? lvdd::Precision::fp16 : lvdd::Precision::fp32;
    cfg.standardize = d_standardize;
    if (d_sigma > 0) cfg.sigma = lvdd::SigmaPolicy::fixed(d_sigma);
    if (d_per_class > 0) cfg.instances_per_class = d_per_class;
    lvdd::DistilledArchive a = lvdd::distill(d, cfg);
    for (const auto& w : a.warnings) std::cerr << "warning: " << w << "\n";
    lvdd::write_distilled(a, d_out);
    std::cout << "wrote " << d_out << ": " << a.sections.size() << " classes, "
              << (a.sections.empty() ? 0 : a.sections[0].item_ids.size())
              << " instances/class, " << a.total_bytes << " bytes data + " << a.model_bytes
              << " bytes model, budget " << a.budget_bytes << " ("
              << (a.within_budget ? "within" : "OVER") << " budget)\n";
    return 0;
  }

  if (dec->parsed()) {
    lvdd::DistilledArchive a = lvdd::read_distilled(c_in);
    lvdd::LatentDataset d = lvdd::decode(a);
    lvdd::write_latent_dataset(d, c_out);
    std::cout << "decoded " << d.items.size() << " items to " << c_out << "\n";
    return 0;
  }

  if (met->parsed()) {
    lvdd::LatentDataset orig = lvdd::read_latent_dataset(m_orig);
    lvdd::LatentDataset decd = lvdd::read_latent_dataset(m_dec);
    lvdd::DistilledArchive arch = lvdd::read_distilled(m_arch);
    lvdd::MetricsReport r = lvdd::evaluate(orig, decd, arch);
    const json j = metrics_json(r);
    if (m_json.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      std::ofstream out(m_json);
      if (!out) throw lvdd::IoError("cannot open for writing: " + m_json);
      out << j.dump(2) << "\n";
      std::cout << "wrote " << m_json << "\n";
    }
    return 0;
  }

  if (qnt->parsed()) {
    if (q_policy != "fc-int8-rest-fp16")
      throw lvdd::ValueError("unknown policy '" + q_policy + "' (expected fc-int8-rest-fp16)");
    lvdd::TensorArchive in = lvdd::read_tensor_archive(q_in);
    lvdd::QuantPolicy policy;
    if (!q_pattern.empty()) policy.fc_name_pattern = q_pattern;
    lvdd::QuantizeResult res = lvdd::archive_quantize(in, policy);
    lvdd::write_tensor_archive(res.archive, q_out);
    if (q_report) std::cout << quant_report_json(res.report).dump(2) << "\n";
    std::cerr << "wrote " << q_out << ": payload ratio " << res.report.payload_ratio
              << ", total ratio " << res.report.total_ratio << "\n";
    return 0;
  }

  if (swp->parsed()) {
    lvdd::LatentDataset d = lvdd::read_latent_dataset(s_in);
    const std::size_t per_class = s_per_class > 0 ? s_per_class : min_class_population(d);
    std::ostringstream csv;
    csv << "ratio,bytes,mse,rel_err\n";
    for (double ratio : parse_ratios(s_ratios)) {
      lvdd::DistillConfig cfg;
      cfg.model_bytes = mb_to_bytes(s_model_mb);
      cfg.budget_bytes =
          s_budget_mb > 0 ? mb_to_bytes(s_budget_mb) : cfg.model_bytes + (1ull << 62);
      cfg.ratio = ratio;
      cfg.method = parse_method(s_method);
      cfg.master_seed = s_seed;
      cfg.instances_per_class = per_class;
      if (s_sigma > 0) cfg.sigma = lvdd::SigmaPolicy::fixed(s_sigma);
      lvdd::DistilledArchive a = lvdd::distill(d, cfg);
      lvdd::MetricsReport r = lvdd::evaluate(d, lvdd::decode(a), a);
      csv << ratio << "," << a.total_bytes << "," << r.mse << "," << r.rel_frobenius << "\n";
    }
    if (s_out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(s_out);
      if (!out) throw lvdd::IoError("cannot open for writing: " + s_out);
      out << csv.str();
      std::cout << "wrote " << s_out << "\n";
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lvdd::InfeasibleBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lvdd::IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lvdd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
