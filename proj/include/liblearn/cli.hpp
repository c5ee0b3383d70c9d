#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipeline.hpp"

namespace liblearn {

struct CliOptions {
  std::string corpus_file;
  std::string rules_file;
  std::string dir;
  std::string out_file;
  std::string stats_file;
  std::string debug_dir;
  bool no_eqs = false;
  bool eqsat_only = false;
  PipelineConfig pipe;
};

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline nlohmann::json stats_json(const RunStats& s) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : s.rounds)
    rounds.push_back({{"round", r.round},
                      {"candidates", r.candidates},
                      {"adopted", r.adopted},
                      {"output_size", r.output_size},
                      {"eqs_stop", r.eqs_stop},
                      {"abstraction_stop", r.abstraction_stop},
                      {"phase_ms",
                       {{"eqsat", r.eqsat_ms},
                        {"candidates", r.candidates_ms},
                        {"selection", r.selection_ms},
                        {"finalize", r.finalize_ms}}}});
  return {{"schema_version", 1},
          {"input_size", s.input_size},
          {"output_size", s.output_size},
          {"compression_ratio", s.compression_ratio},
          {"num_abstractions", s.num_abstractions},
          {"saturated", s.saturated},
          {"stop_reason", s.stop_reason},
          {"phase_ms",
           {{"eqsat", s.eqsat_ms},
            {"candidates", s.candidates_ms},
            {"selection", s.selection_ms},
            {"finalize", s.finalize_ms},
            {"total", s.total_ms}}},
          {"rounds", rounds}};
}

inline RoundHook debug_hook(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return [dir](int round, const CandidateSet& cands, const SelectionResult* sel,
               const CompressedOutput* out) {
    nlohmann::json j;
    j["round"] = round;
    j["pairs_considered"] = cands.pairs_considered;
    j["raw_patterns"] = cands.raw_patterns;
    nlohmann::json arr = nlohmann::json::array();
    constexpr size_t kMaxDump = 500;
    for (size_t i = 0; i < cands.candidates.size() && i < kMaxDump; ++i) {
      const Candidate& c = cands.candidates[i];
      arr.push_back({{"pattern", print(c.pattern)},
                     {"arity", c.arity},
                     {"size", c.size},
                     {"matched_classes", c.n_matched_classes},
                     {"matched_positions", c.n_matched_positions}});
    }
    j["candidates"] = arr;
    j["candidates_truncated"] = cands.candidates.size() > kMaxDump;
    if (sel) {
      j["selection"] = {{"chosen", sel->chosen.size()},
                        {"use_cost", sel->use_cost},
                        {"library_size", sel->library_size},
                        {"total", sel->total},
                        {"pool_size", sel->pool_size},
                        {"exhaustive", sel->exhaustive},
                        {"cost_sets_converged", sel->cost_sets_converged}};
    }
    if (out) {
      nlohmann::json libs = nlohmann::json::array();
      for (const auto& d : out->libs)
        libs.push_back({{"name", d.name}, {"arity", d.arity}, {"body", print(d.body)}});
      j["emitted"] = libs;
    }
    write_file((std::filesystem::path(dir) / ("round-" + std::to_string(round) + ".json")).string(),
               j.dump(2) + "\n");
  };
}

inline PipelineResult compress_one(const std::string& corpus_path,
                                   const std::vector<RewriteRule>& eqs, const CliOptions& o) {
  std::vector<CorpusEntry> corpus = parse_corpus(read_file(corpus_path));
  RoundHook hook;
  if (!o.debug_dir.empty()) hook = debug_hook(o.debug_dir);
  return run_pipeline(corpus, eqs, o.pipe, hook);
}

}  // namespace cli_detail

inline int run_compress(CliOptions o) {
  o.pipe.use_eqs = !o.no_eqs;
  o.pipe.eqsat_only = o.eqsat_only;
  try {
    std::vector<RewriteRule> eqs;
    if (!o.rules_file.empty()) eqs = parse_rules(cli_detail::read_file(o.rules_file));
    PipelineResult r = cli_detail::compress_one(o.corpus_file, eqs, o);
    std::string text = print_lib(r.output.libs, r.output.root) + "\n";
    if (o.out_file.empty())
      std::cout << text;
    else
      cli_detail::write_file(o.out_file, text);
    if (!o.stats_file.empty())
      cli_detail::write_file(o.stats_file, cli_detail::stats_json(r.stats).dump(2) + "\n");
    std::cerr << o.corpus_file << ": " << r.stats.input_size << " -> " << r.stats.output_size
              << " (ratio " << r.stats.compression_ratio << ", " << r.stats.num_abstractions
              << " functions, " << r.stats.rounds.size() << " rounds)\n";
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

inline int run_bench(CliOptions o) {
  o.pipe.use_eqs = !o.no_eqs;
  o.pipe.eqsat_only = o.eqsat_only;
  try {
    std::vector<RewriteRule> eqs;
    if (!o.rules_file.empty()) eqs = parse_rules(cli_detail::read_file(o.rules_file));

    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(o.dir))
      if (e.is_regular_file() && e.path().extension() == ".sexp") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    nlohmann::json rows = nlohmann::json::array();
    int ok = 0, failed = 0;
    double cr_sum = 0, total_ms = 0;
    for (const auto& f : files) {
      try {
        std::vector<CorpusEntry> corpus = parse_corpus(cli_detail::read_file(f.string()));
        PipelineResult r = run_pipeline(corpus, eqs, o.pipe);
        rows.push_back(
            {{"file", f.filename().string()}, {"stats", cli_detail::stats_json(r.stats)}});
        ok += 1;
        cr_sum += r.stats.compression_ratio;
        total_ms += r.stats.total_ms;
        std::cerr << f.filename().string() << ": " << r.stats.input_size << " -> "
                  << r.stats.output_size << " (ratio " << r.stats.compression_ratio << ", "
                  << r.stats.total_ms / 1000.0 << " s)\n";
      } catch (const std::exception& e) {
        rows.push_back({{"file", f.filename().string()}, {"error", e.what()}});
        failed += 1;
        std::cerr << f.filename().string() << ": failed: " << e.what() << "\n";
      }
    }
    nlohmann::json report = {{"schema_version", 1},
                             {"rows", rows},
                             {"aggregate",
                              {{"corpora", ok + failed},
                               {"failed", failed},
                               {"mean_compression_ratio", ok ? cr_sum / ok : 0.0},
                               {"total_ms", total_ms}}}};
    std::string text = report.dump(2) + "\n";
    if (o.out_file.empty())
      std::cout << text;
    else
      cli_detail::write_file(o.out_file, text);
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Compresses corpora of programs by learning a library of reusable abstractions, "
               "optionally modulo an equational theory."};
  app.require_subcommand(1);
  CliOptions copt, bopt;

  auto add_common = [](CLI::App* c, CliOptions& o) {
    c->add_option("--rules", o.rules_file, "equational theory file: (=> lhs rhs) / (<=> lhs rhs)");
    c->add_option("--rounds", o.pipe.rounds, "learning rounds")
        ->check(CLI::Range(1, 1000000));
    c->add_option("--beam-size", o.pipe.beam_width,
                  "cost-set entries kept per class; 0 = unlimited")
        ->check(CLI::Range(int64_t{0}, int64_t{1} << 32));
    c->add_option("--lib-size", o.pipe.max_lib_fns,
                  "max functions per cost-set entry and per round; 0 = unlimited")
        ->check(CLI::Range(int64_t{0}, int64_t{64}));
    c->add_option("--max-arity", o.pipe.max_arity, "max abstraction arity")
        ->check(CLI::Range(0, 64));
    c->add_option("--eqsat-iters", o.pipe.eqsat.max_iterations, "saturation iteration limit")
        ->check(CLI::Range(size_t{1}, size_t{100000}));
    c->add_option("--eqsat-nodes", o.pipe.eqsat.max_nodes, "saturation node limit")
        ->check(CLI::Range(size_t{1}, size_t{1} << 32));
    c->add_option("--eqsat-seconds", o.pipe.eqsat.max_seconds, "saturation time limit");
    c->add_flag("--no-eqs", o.no_eqs, "ignore the equational theory (purely syntactic)");
    c->add_flag("--eqsat-only", o.eqsat_only,
                "saturate and extract the cheapest corpus; learn no abstractions");
    c->add_option("--out", o.out_file, "output file (default: stdout)");
  };

  CLI::App* comp = app.add_subcommand("compress", "compress one corpus file");
  comp->add_option("--corpus", copt.corpus_file, "corpus file, one program or (group ...) per entry")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(comp, copt);
  comp->add_option("--stats", copt.stats_file, "write run statistics JSON here");
  comp->add_option("--seed-debug", copt.debug_dir, "write per-round debug artifacts to this directory");

  CLI::App* bench = app.add_subcommand("bench", "compress every .sexp corpus in a directory");
  bench->add_option("--dir", bopt.dir, "directory of corpus files")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common(bench, bopt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (comp->parsed()) return run_compress(copt);
  return run_bench(bopt);
}

}  // namespace liblearn
