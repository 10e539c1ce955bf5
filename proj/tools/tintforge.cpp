// tintforge command-line tool.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tintforge/llm_client.hpp"
#include "tintforge/tintforge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tintforge;

namespace {

fs::path default_data_dir() {
  if (const char* env = std::getenv("TINTFORGE_DATA_DIR"); env != nullptr && *env != '\0') return env;
#ifdef TINTFORGE_DATA_DIR
  return TINTFORGE_DATA_DIR;
#else
  return "data";
#endif
}

struct Common {
  std::string data_dir = default_data_dir().string();
  std::string basics;
  std::string vocab;

  fs::path basics_path() const { return basics.empty() ? fs::path(data_dir) / "basic_colors.csv" : fs::path(basics); }
  fs::path vocab_path() const { return vocab.empty() ? fs::path(data_dir) / "compound_colors.csv" : fs::path(vocab); }
};

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<double> parse_triple(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (std::string(trim(part.substr(used))).size() != 0) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw input_error("invalid number '" + part + "' in '" + text + "'");
    }
  }
  if (v.size() != 3) throw input_error("expected three comma-separated values, got '" + text + "'");
  return v;
}

json triple(double a, double b, double c) { return json::array({a, b, c}); }

json convert_color(const std::string& from, const std::string& to, const std::string& value) {
  const std::string f = to_lower(from), t = to_lower(to);
  XyzColor xyz;
  std::optional<SrgbColor> srgb;
  if (f == "srgb" || f == "rgb" || f == "hex") {
    srgb = parse_hex(value);
    xyz = srgb_to_xyz(*srgb);
  } else if (f == "lab" || f == "cielab") {
    const auto v = parse_triple(value);
    xyz = lab_to_xyz(LabColor(v[0], v[1], v[2]));
  } else if (f == "xyz") {
    const auto v = parse_triple(value);
    xyz = {v[0], v[1], v[2]};
  } else {
    throw input_error("unsupported source space '" + from + "' (srgb, lab, xyz)");
  }
  bool clamped = false;
  if (!srgb && t != "lab" && t != "cielab" && t != "xyz" && t != "cie1931" && t != "xyy") {
    const auto conv = xyz_to_srgb(xyz);
    srgb = conv.color;
    clamped = conv.clamped;
  }
  json out{{"from", f}, {"to", t}, {"input", value}};
  if (t == "lab" || t == "cielab") {
    const auto lab = xyz_to_lab(xyz);
    out["value"] = triple(lab.L(), lab.a(), lab.b());
  } else if (t == "xyz") {
    out["value"] = triple(xyz.x, xyz.y, xyz.z);
  } else if (t == "cie1931" || t == "xyy") {
    const auto c = xyz_to_xyy(xyz);
    out["value"] = triple(c.x, c.y, c.Y);
  } else if (t == "srgb" || t == "rgb" || t == "hex") {
    out["value"] = triple(srgb->r(), srgb->g(), srgb->b());
    out["hex"] = to_hex(*srgb);
    out["clamped"] = clamped;
  } else if (t == "hsv") {
    const auto c = srgb_to_hsv(*srgb);
    out["value"] = triple(c.h, c.s, c.v);
  } else if (t == "ycbcr") {
    const auto c = srgb_to_ycbcr(*srgb);
    out["value"] = triple(c.y, c.cb, c.cr);
  } else if (t == "yuv") {
    const auto c = srgb_to_yuv(*srgb);
    out["value"] = triple(c.y, c.u, c.v);
  } else {
    throw input_error("unsupported target space '" + to + "' (srgb, lab, xyz, hsv, ycbcr, yuv, cie1931)");
  }
  if (clamped && t != "srgb" && t != "rgb" && t != "hex") out["clamped"] = true;
  return out;
}

json anchors_json(const std::vector<RankedAnchor>& anchors) {
  json a = json::array();
  for (const auto& r : anchors) a.push_back({{"name", r.anchor.name}, {"hex", to_hex(r.anchor.srgb)}, {"delta_e", r.delta_e}});
  return a;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!trim(part).empty()) out.emplace_back(trim(part));
  return out;
}

std::pair<std::size_t, std::size_t> parse_map_shape(const std::string& text) {
  const auto x = to_lower(text).find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const long rows = std::stol(text.substr(0, x));
    const long cols = std::stol(text.substr(x + 1));
    if (rows <= 0 || cols <= 0) throw std::invalid_argument(text);
    return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
  } catch (const std::exception&) {
    throw input_error("map shape must look like 8x8, got '" + text + "'");
  }
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return 2;
    case ErrorKind::Network: return 3;
    case ErrorKind::Schema: return 4;
  }
  return 1;
}

int report(ErrorKind kind, const std::string& message, const std::string& stage = {}) {
  json d{{"error", {{"kind", to_string(kind)}, {"message", message}}}};
  if (!stage.empty()) d["error"]["stage"] = stage;
  std::cerr << d.dump() << '\n';
  return exit_code(kind);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw input_error("failed writing '" + path.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptual color math, color-embedding blending, binding guidance and prompt benchmark tools"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--data-dir", common.data_dir, "Directory with basic_colors.csv and compound_colors.csv")
      ->capture_default_str();
  app.add_option("--basics", common.basics, "Basic color palette CSV (name,hex)");
  app.add_option("--vocab", common.vocab, "Compound color database CSV (name,category,hex,anchor)");

  // convert
  auto* convert = app.add_subcommand("convert", "Convert a color between spaces");
  std::string conv_from = "srgb", conv_to = "lab", conv_value;
  convert->add_option("--from", conv_from, "srgb (hex), lab (L,a,b) or xyz (X,Y,Z)")->capture_default_str();
  convert->add_option("--to", conv_to, "srgb, lab, xyz, hsv, ycbcr, yuv or cie1931")->capture_default_str();
  convert->add_option("value", conv_value, "Color value")->required();

  // deltae
  auto* deltae = app.add_subcommand("deltae", "CIEDE2000 difference between two hex colors");
  std::string de_a, de_b;
  DeltaEParams de_params;
  deltae->add_option("a", de_a, "First color (hex)")->required();
  deltae->add_option("b", de_b, "Second color (hex)")->required();
  deltae->add_option("--kL", de_params.kL, "Lightness weight")->capture_default_str();
  deltae->add_option("--kC", de_params.kC, "Chroma weight")->capture_default_str();
  deltae->add_option("--kH", de_params.kH, "Hue weight")->capture_default_str();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Hue group and nearest basic anchors of a color");
  std::string ret_color;
  std::size_t ret_k = 3;
  retrieve->add_option("--color", ret_color, "Color (hex)")->required();
  retrieve->add_option("-k", ret_k, "Number of anchors")->capture_default_str();

  // blend
  auto* blend = app.add_subcommand("blend", "Blend basic-color embeddings into a target vector");
  std::string bl_color, bl_store, bl_out;
  std::size_t bl_k = 3;
  double bl_sigma = 20.0;
  std::string bl_metric = "cosine";
  blend->add_option("--color", bl_color, "Target color (hex)")->required();
  blend->add_option("-k", bl_k, "Number of anchors")->capture_default_str();
  blend->add_option("--sigma", bl_sigma, "Gaussian bandwidth in delta-E units")->capture_default_str();
  blend->add_option("--store", bl_store, "TINTEMB1 embedding store with the basic terms")->required();
  blend->add_option("--out", bl_out, "Write the target as a one-entry TINTEMB1 file");
  blend->add_option("--metric", bl_metric, "Metric for the nearest-entry report: cosine or euclidean")
      ->capture_default_str();

  // swatch
  auto* swatch = app.add_subcommand("swatch", "Linear sweep in Lab between two colors as a PPM strip");
  std::string sw_from, sw_to, sw_out;
  std::size_t sw_steps = 8, sw_cell = 32;
  swatch->add_option("--from", sw_from, "Start color (hex)")->required();
  swatch->add_option("--to", sw_to, "End color (hex)")->required();
  swatch->add_option("--steps", sw_steps, "Number of swatches, at least 2")->capture_default_str();
  swatch->add_option("--cell", sw_cell, "Swatch size in pixels")->capture_default_str();
  swatch->add_option("--out", sw_out, "Output PPM (P6) path")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Rank correlation of color-space and embedding distances");
  std::string an_store, an_spaces = "rgb,lab,hsv,ycbcr,yuv,cie1931", an_metric = "cosine", an_out, an_matrices;
  analyze->add_option("--store", an_store, "TINTEMB1 store containing the eleven basic terms")->required();
  analyze->add_option("--spaces", an_spaces, "Comma-separated color spaces")->capture_default_str();
  analyze->add_option("--metric", an_metric, "cosine or euclidean")->capture_default_str();
  analyze->add_option("--out", an_out, "Write the JSON report here instead of stdout");
  analyze->add_option("--matrices-out", an_matrices, "Directory for CSV distance matrices");

  // disambiguate
  auto* disamb = app.add_subcommand("disambiguate", "Detect and resolve color terms in a prompt");
  std::string dis_prompt;
  bool dis_offline = false;
  LlmConfig llm;
  disamb->add_option("--prompt", dis_prompt, "Prompt text")->required();
  disamb->add_flag("--offline", dis_offline, "Resolve through the compound color database only");
  auto add_llm_options = [&](CLI::App* sub) {
    sub->add_option("--endpoint", llm.endpoint, "OpenAI-compatible base URL")->capture_default_str();
    sub->add_option("--model", llm.model, "Model name")->capture_default_str();
    sub->add_option("--timeout", llm.timeout_seconds, "Request timeout in seconds")->capture_default_str();
    sub->add_option("--max-attempts", llm.max_attempts, "Attempts per request on network failure")
        ->capture_default_str();
  };
  add_llm_options(disamb);

  // build-bench
  auto* bench = app.add_subcommand("build-bench", "Build the single/multi color prompt benchmark");
  std::string bb_captions, bb_out, bb_embeddings, bb_stats;
  BenchConfig bb;
  bench->add_option("--captions", bb_captions, "Captions as JSON lines {\"id\",\"caption\"}")->required();
  bench->add_option("--embeddings", bb_embeddings, "TINTEMB1 caption vectors keyed by id (default: TF-IDF)");
  bench->add_option("--k", bb.k, "Clusters per group")->capture_default_str();
  bench->add_option("--per-cluster", bb.per_cluster, "Captions sampled per cluster")->capture_default_str();
  bench->add_option("--expansions", bb.expansions, "Prompts generated per sampled caption")->capture_default_str();
  bench->add_option("--seed", bb.seed, "Random seed")->capture_default_str();
  bench->add_option("--max-iters", bb.max_iters, "k-means iteration cap")->capture_default_str();
  bench->add_option("--restarts", bb.restarts, "Seeded k-means runs; the lowest-WCSS run is kept")
      ->capture_default_str();
  bench->add_option("--out", bb_out, "Output JSON lines")->required();
  bench->add_option("--stats-out", bb_stats, "Also write the build statistics JSON here");

  // guide-demo
  auto* guide = app.add_subcommand("guide-demo", "Binding guidance on a synthetic attention provider");
  std::uint64_t gd_seed = 7;
  std::size_t gd_dim = 16, gd_pairs = 2;
  std::string gd_map = "8x8", gd_out;
  double gd_alpha = 1e-4;
  int gd_steps = 50;
  bool gd_numeric = false;
  guide->add_option("--seed", gd_seed, "Provider and latent seed")->capture_default_str();
  guide->add_option("--latent-dim", gd_dim, "Latent dimension")->capture_default_str();
  guide->add_option("--map", gd_map, "Attention map shape, ROWSxCOLS")->capture_default_str();
  guide->add_option("--pairs", gd_pairs, "Color/entity pairs")->capture_default_str();
  guide->add_option("--alpha", gd_alpha, "Binding scale")->capture_default_str();
  guide->add_option("--steps", gd_steps, "Number of update steps")->capture_default_str();
  guide->add_flag("--numeric", gd_numeric, "Use central differences instead of the analytic gradient");
  guide->add_option("--out", gd_out, "CSV trace (step,loss,grad_norm); stdout when omitted");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage on one prompt and print the JSON trace");
  std::string pl_prompt, pl_store, pl_metric = "cosine", pl_policy = "whole-span";
  PipelineConfig pc;
  bool pl_online = false;
  pipe->add_option("--prompt", pl_prompt, "Prompt text")->required();
  pipe->add_option("--store", pl_store, "TINTEMB1 store with the basic terms")->required();
  pipe->add_option("--sigma", pc.sigma, "Gaussian bandwidth in delta-E units")->capture_default_str();
  pipe->add_option("-k", pc.k, "Anchors per color")->capture_default_str();
  pipe->add_option("--alpha", pc.binding_scale, "Binding scale for the guidance demo")->capture_default_str();
  pipe->add_option("--metric", pl_metric, "cosine or euclidean")->capture_default_str();
  pipe->add_option("--span-policy", pl_policy, "whole-span or first-token")->capture_default_str();
  pipe->add_option("--seed", pc.seed, "Seed for the guidance demo")->capture_default_str();
  pipe->add_option("--guide-steps", pc.guide_steps, "Synthetic guidance steps (0 disables)")->capture_default_str();
  pipe->add_flag("--online", pl_online, "Disambiguate through the LLM endpoint instead of offline");
  add_llm_options(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(ErrorKind::Input, e.what());
  }

  try {
    if (*convert) {
      print(convert_color(conv_from, conv_to, conv_value));
    } else if (*deltae) {
      de_params.validate();
      const auto a = parse_hex(de_a), b = parse_hex(de_b);
      print({{"a", to_hex(a)}, {"b", to_hex(b)}, {"delta_e", ciede2000(srgb_to_lab(a), srgb_to_lab(b), de_params)}});
    } else if (*retrieve) {
      const auto palette = load_basic_palette(common.basics_path());
      const auto color = parse_hex(ret_color);
      const auto lab = srgb_to_lab(color);
      const auto cls = classify_hue_group(palette, color);
      print({{"color", to_hex(color)},
             {"lab", triple(lab.L(), lab.a(), lab.b())},
             {"hue_group", to_string(cls.group)},
             {"nearest", {{"name", cls.nearest.name}, {"delta_e", cls.delta_e}}},
             {"anchors", anchors_json(topk_basic_in_group(palette, color, ret_k))}});
    } else if (*blend) {
      const auto palette = load_basic_palette(common.basics_path());
      const auto color = parse_hex(bl_color);
      const auto store = load_store(bl_store);
      const auto anchors = topk_basic_in_group(palette, color, bl_k);
      BlendSpec spec;
      spec.sigma = bl_sigma;
      for (const auto& a : anchors) spec.anchors.push_back({a.anchor.name, a.delta_e});
      const auto weights = gaussian_weights(spec);
      const auto target = blend_target(store, spec);
      json a = anchors_json(anchors);
      for (std::size_t i = 0; i < a.size(); ++i) a[i]["weight"] = weights[i];
      json out{{"color", to_hex(color)},
               {"hue_group", to_string(classify_hue_group(palette, color).group)},
               {"sigma", bl_sigma},
               {"anchors", a},
               {"dim", target.size()},
               {"checksum", checksum_hex(vector_checksum(target))},
               {"nearest_entry", nearest_entry(store, target, parse_metric(bl_metric))}};
      if (!bl_out.empty()) {
        EmbeddingStore single(static_cast<std::uint32_t>(target.size()));
        single.add(to_hex(color), std::span<const double>(target));
        save_store(single, bl_out);
        out["out"] = bl_out;
      }
      print(out);
    } else if (*swatch) {
      const auto sweep = lab_sweep(parse_hex(sw_from), parse_hex(sw_to), sw_steps);
      std::vector<SrgbColor> colors;
      json steps = json::array();
      for (const auto& s : sweep) {
        colors.push_back(s.color);
        steps.push_back({{"alpha", s.alpha}, {"hex", to_hex(s.color)}, {"clamped", s.clamped}});
      }
      save_ppm_strip(sw_out, colors, sw_cell);
      print({{"out", sw_out}, {"steps", steps}});
    } else if (*analyze) {
      const auto palette = load_basic_palette(common.basics_path());
      const auto store = load_store(an_store);
      std::vector<ColorSpace> spaces;
      for (const auto& s : split_list(an_spaces)) spaces.push_back(parse_color_space(s));
      if (spaces.empty()) throw input_error("no color spaces requested");
      const auto study = run_correlation_study(store, palette, spaces, parse_metric(an_metric));
      if (!an_matrices.empty()) {
        fs::create_directories(an_matrices);
        std::ostringstream e;
        write_matrix_csv(e, study.embedding_distances, study.terms);
        write_text_file(fs::path(an_matrices) / "embedding.csv", e.str());
        for (const auto& r : study.reports) {
          std::ostringstream m;
          write_matrix_csv(m, r.color_distances, study.terms);
          write_text_file(fs::path(an_matrices) / (std::string(to_string(r.space)) + ".csv"), m.str());
        }
      }
      const auto j = to_json(study);
      if (an_out.empty()) print(j);
      else write_text_file(an_out, j.dump(2) + "\n");
    } else if (*disamb) {
      const auto vocab = load_vocab(common.vocab_path(), common.basics_path());
      if (dis_offline) {
        print(to_json(disambiguate_offline(dis_prompt, vocab)));
      } else {
        llm.api_key = api_key_from_env();
        HttpChatTransport transport(llm);
        print(to_json(disambiguate_llm(dis_prompt, transport, llm)));
      }
    } else if (*bench) {
      const auto vocab = load_vocab(common.vocab_path(), common.basics_path());
      const auto captions = load_captions_jsonl(bb_captions);
      std::optional<EmbeddingStore> store;
      if (!bb_embeddings.empty()) store = load_store(bb_embeddings);
      const auto build = build_tintbench(captions, vocab, bb, store ? &*store : nullptr);
      std::ostringstream lines;
      write_bench_jsonl(lines, build);
      write_text_file(bb_out, lines.str());
      std::size_t fallbacks = 0;
      for (const auto* g : {&build.single, &build.multi})
        for (const auto& p : g->prompts)
          for (const auto& s : p.substitutions) fallbacks += s.fallback ? 1 : 0;
      json stats{{"captions", build.stats.total},
                 {"single_captions", build.stats.single},
                 {"multi_captions", build.stats.multi},
                 {"dropped", build.stats.dropped},
                 {"retained_fraction", build.stats.retained_fraction()},
                 {"single_prompts", build.single.prompts.size()},
                 {"multi_prompts", build.multi.prompts.size()},
                 {"category_fallbacks", fallbacks},
                 {"kmeans",
                  {{"single", {{"iterations", build.single.clustering.iterations},
                               {"wcss", build.single.clustering.wcss()}}},
                   {"multi", {{"iterations", build.multi.clustering.iterations},
                              {"wcss", build.multi.clustering.wcss()}}}}},
                 {"out", bb_out}};
      if (!bb_stats.empty()) write_text_file(bb_stats, stats.dump(2) + "\n");
      print(stats);
    } else if (*guide) {
      const auto [rows, cols] = parse_map_shape(gd_map);
      const SyntheticAttentionProvider provider(gd_seed, gd_dim, rows, cols, gd_pairs);
      GuidanceOptions opts;
      opts.force_numeric = gd_numeric;
      const auto pairs = provider.default_pairs();
      const auto run = run_guidance(SyntheticAttentionProvider::initial_latent(gd_seed, gd_dim), provider, pairs,
                                    gd_alpha, gd_steps, opts);
      std::ostringstream csv;
      csv << "step,loss,grad_norm\n";
      char buf[96];
      for (const auto& r : run.trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.step, r.loss, r.grad_norm);
        csv << buf;
      }
      if (gd_out.empty()) std::cout << csv.str();
      else write_text_file(gd_out, csv.str());
    } else if (*pipe) {
      pc.basics_path = common.basics_path();
      pc.vocab_path = common.vocab_path();
      pc.store_path = pl_store;
      pc.metric = parse_metric(pl_metric);
      if (pl_policy == "whole-span") pc.span_policy = SpanPolicy::WholeSpan;
      else if (pl_policy == "first-token") pc.span_policy = SpanPolicy::FirstToken;
      else throw input_error("unknown span policy '" + pl_policy + "'");
      pc.offline = !pl_online;
      llm.api_key = api_key_from_env();
      pc.llm = llm;
      std::optional<HttpChatTransport> transport;
      if (pl_online) transport.emplace(llm);
      print(run_pipeline(pl_prompt, pc, transport ? &*transport : nullptr).trace);
    }
  } catch (const StageError& e) {
    return report(e.kind(), e.what(), e.stage());
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report(ErrorKind::Input, e.what());
  }
  return 0;
}
