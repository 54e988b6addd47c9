#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmw2s/cli/run_config.hpp"
#include "mmw2s/corpus/corpus_io.hpp"
#include "mmw2s/eval/ablation.hpp"
#include "mmw2s/verify/checks.hpp"

namespace mmw2s {

/// Exclusive lock file inside an output directory, removed on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::kIo, "cannot create output directory " + dir + ": " + ec.message());
    path_ = (std::filesystem::path(dir) / ".mmw2s.lock").string();
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      require(errno != EEXIST, ErrorCode::kLocked, "output directory " + dir + " is in use (" + path_ + ")");
      fail(ErrorCode::kIo, "cannot create lock file " + path_ + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~OutputLock() { ::unlink(path_.c_str()); }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> window_s, stride_s;
  std::optional<std::string> modalities, attention, mode;
  std::string out, corpus, manifest, checkpoint, init;
  std::vector<std::string> sources;
  std::optional<std::size_t> n_sources, per_class, max_steps;
  std::optional<double> noise;
  bool ablation = false, latency = false, pipelined = false;
  double speed = 0.0;
};

namespace cli_detail {

inline std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void write_json(const std::string& path, const nlohmann::json& j) { binary::write_file(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::string& path) {
  const std::string text = binary::read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, path + ": " + e.what());
  }
}

inline RunConfig resolve_config(const CliOptions& o, const std::string& command) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::error_code ec;
    require(std::filesystem::is_regular_file(o.config_path, ec), ErrorCode::kUsage,
            "cannot read --config " + o.config_path);
    j = read_json(o.config_path);
  }
  RunConfig c = run_config_from_json(j);
  if (o.seed) c.seed = *o.seed;
  if (o.window_s) c.window.window_s = *o.window_s;
  if (o.stride_s) c.window.stride_s = *o.stride_s;
  if (o.modalities) c.modalities = ModalitySet::parse(*o.modalities);
  if (o.attention) {
    require(*o.attention == "on" || *o.attention == "off", ErrorCode::kUsage, "--attention takes on or off");
    c.model.attention = *o.attention == "on";
  }
  if (o.mode) (command == "build" ? c.build.mode : c.eval.mode) = *o.mode;
  if (o.n_sources) c.synth.n_sources = *o.n_sources;
  if (o.noise) c.synth.noise = *o.noise;
  if (o.per_class) {
    std::array<std::size_t, kNumLabels> q;
    q.fill(*o.per_class);
    c.build.quota = ClipQuota::by_label(q);
  }
  if (o.max_steps) c.train.max_steps = *o.max_steps;
  c.resolve();
  return c;
}

inline CorpusManifest load_manifest(const std::string& dir) {
  const auto meta = read_json(path_in(dir, "manifest.json"));
  require(meta.contains("manifest"), ErrorCode::kFormat, dir + "/manifest.json has no manifest section");
  return manifest_from_meta(meta["manifest"], records_from_jsonl(binary::read_file(path_in(dir, "manifest.jsonl"))));
}

inline nlohmann::json full_videos_to_json(const std::vector<FullVideoLabels>& all) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : all) {
    nlohmann::json labels = nlohmann::json::array();
    for (auto l : f.labels) labels.push_back(label_name(l));
    arr.push_back({{"source_id", f.source_id}, {"window", f.window}, {"labels", labels}});
  }
  return arr;
}

inline std::vector<FullVideoLabels> full_videos_from_json(const nlohmann::json& arr) {
  std::vector<FullVideoLabels> out;
  try {
    for (const auto& j : arr) {
      FullVideoLabels f{j.at("source_id").get<std::string>(), j.at("window").get<WindowConfig>(), {}};
      for (const auto& l : j.at("labels")) f.labels.push_back(label_from_name(l.get<std::string>()));
      out.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("full-videos labels: ") + e.what());
  }
  return out;
}

inline void need(const std::string& value, const char* flag) {
  require(!value.empty(), ErrorCode::kUsage, std::string(flag) + " is required");
}

/// A required input that must already exist.
inline void need_path(const std::string& value, const char* flag) {
  need(value, flag);
  std::error_code ec;
  require(std::filesystem::exists(value, ec), ErrorCode::kUsage,
          std::string("cannot read ") + flag + " " + value);
}

}  // namespace cli_detail

/// Writes <out>/timelines.jsonl, <out>/sources/ and <out>/run_config.json.
inline void cmd_synth(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  need(o.out, "--out");
  OutputLock lock(o.out);
  Corpus corpus = synth_corpus(cfg.synth);
  save_corpus(o.out, corpus);
  write_json(path_in(o.out, "run_config.json"), cfg);
  log << "synthesized " << corpus.sources.size() << " sources into " << o.out << "\n";
}

/// Short clips: <out>/manifest.jsonl + manifest.json. Full videos:
/// <out>/full_videos.json.
inline void cmd_build(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  need(o.out, "--out");
  need_path(o.corpus, "--corpus");
  const Corpus corpus = load_corpus(o.corpus);
  OutputLock lock(o.out);
  if (cfg.build.mode == "full_videos") {
    const auto all = build_full_videos(corpus, cfg.window, cfg.rules);
    write_json(path_in(o.out, "full_videos.json"), {{"sources", full_videos_to_json(all)}, {"run_config", cfg}});
    std::size_t n = 0;
    for (const auto& f : all) n += f.labels.size();
    log << "labeled " << n << " windows over " << all.size() << " sources\n";
    return;
  }
  const auto m = build_short_clips(corpus, cfg.build.quota, cfg.build.split_ratio, cfg.seed, cfg.window, cfg.rules);
  binary::write_file(path_in(o.out, "manifest.jsonl"), records_to_jsonl(m.records, &corpus));
  write_json(path_in(o.out, "manifest.json"), {{"manifest", manifest_meta(m)}, {"run_config", cfg}});
  log << "wrote " << m.records.size() << " records (" << m.subset(Split::kTrain).size() << " train)\n";
}

/// <out>/checkpoint.bin, loss_log.csv (align_log.csv when aligning) and
/// train_summary.json.
inline void cmd_train(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  need(o.out, "--out");
  need_path(o.corpus, "--corpus");
  need_path(o.manifest, "--manifest");
  const Corpus corpus = load_corpus(o.corpus);
  const CorpusManifest m = load_manifest(o.manifest);
  OutputLock lock(o.out);
  Checkpoint ck;
  if (!o.init.empty()) {
    need_path(o.init, "--init");
    ck = load_checkpoint(o.init);
  } else {
    ck.model = MultimodalModel(cfg.model, cfg.seed);
    ck.frontend = cfg.frontend;
    ck.modalities = cfg.modalities;
  }
  ck.run_config = cfg;
  const auto train = examples_from_records(corpus, m.subset(Split::kTrain), m.window, ck.frontend, ck.model.config());
  if (o.init.empty() && cfg.train.align_steps > 0 && ck.modalities.size() >= 2) {
    const auto align_log = align_pretrain(ck, train, cfg.train);
    binary::write_file(path_in(o.out, "align_log.csv"), format_loss_log(align_log));
  }
  const TrainResult r = finetune(ck, train, cfg.train, [&](const StepLog& s) {
    if (s.step % 50 == 0) log << "step " << s.step << " loss " << s.loss << "\n";
  });
  save_checkpoint(path_in(o.out, "checkpoint.bin"), ck);
  binary::write_file(path_in(o.out, "loss_log.csv"), format_loss_log(r.log));
  write_json(path_in(o.out, "train_summary.json"), {{"final_step", r.final_step},
                                                    {"stopped_early", r.stopped_early},
                                                    {"train_accuracy", r.train_accuracy},
                                                    {"n_train", train.size()},
                                                    {"checkpoint_id", checkpoint_id(ck)},
                                                    {"run_config", cfg}});
  log << "trained to step " << r.final_step << "\n";
}

/// <out>/report.{json,csv}, or ablation.{json,csv} with --ablation.
inline void cmd_eval(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  need(o.out, "--out");
  need_path(o.corpus, "--corpus");
  const Corpus corpus = load_corpus(o.corpus);
  if (o.ablation) {
    need_path(o.manifest, "--manifest");
    const CorpusManifest m = load_manifest(o.manifest);
    OutputLock lock(o.out);
    const auto train = examples_from_records(corpus, m.subset(Split::kTrain), m.window, cfg.frontend, cfg.model);
    const auto test = examples_from_records(corpus, m.subset(Split::kTest), m.window, cfg.frontend, cfg.model);
    const AblationResult r =
        ablation_suite(train, test, cfg.frontend, cfg.model, cfg.train, cfg.eval.ablation_seeds, [&](const auto& c) {
          log << c.modalities.short_name() << (c.attention ? " attn" : " no-attn") << " seed " << c.seed
              << " macro-F1 " << c.report.macro_f1 << "\n";
        });
    nlohmann::json j = ablation_to_json(r);
    j["run_config"] = cfg;
    write_json(path_in(o.out, "ablation.json"), j);
    binary::write_file(path_in(o.out, "ablation.csv"), ablation_table_csv(r));
    return;
  }
  need_path(o.checkpoint, "--checkpoint");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  EvalReport rep;
  if (cfg.eval.mode == "full_videos") {
    std::vector<FullVideoLabels> gold;
    if (!o.manifest.empty()) {
      need_path(o.manifest, "--manifest");
      gold = full_videos_from_json(read_json(path_in(o.manifest, "full_videos.json")).at("sources"));
    } else {
      gold = build_full_videos(corpus, cfg.window, cfg.rules);
    }
    const std::set<std::string> ids(o.sources.begin(), o.sources.end());
    OutputLock lock(o.out);
    rep = evaluate_full_videos(corpus, gold, ck, cfg.modalities, ids);
  } else {
    need_path(o.manifest, "--manifest");
    const CorpusManifest m = load_manifest(o.manifest);
    OutputLock lock(o.out);
    rep = evaluate_short_clips(m, corpus, ck, cfg.modalities);
  }
  rep.meta["run_config"] = cfg;
  write_json(path_in(o.out, "report.json"), report_to_json(rep));
  binary::write_file(path_in(o.out, "report.csv"), report_to_csv(rep));
  log << "macro-F1 " << rep.macro_f1 << " over " << rep.confusion.total() << " clips\n";
}

/// <out>/events.jsonl: a header line with the run config, then one line per
/// decision. Wall-clock latency is only written with --latency, so the
/// default file is reproducible.
inline void cmd_stream(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  need(o.out, "--out");
  need_path(o.corpus, "--corpus");
  need_path(o.checkpoint, "--checkpoint");
  const Corpus corpus = load_corpus(o.corpus);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  std::vector<const CorpusSource*> sources;
  for (const auto& id : o.sources) {
    const CorpusSource* s = corpus.find(id);
    require(s != nullptr, ErrorCode::kUsage, "unknown source " + id);
    sources.push_back(s);
  }
  if (o.sources.empty()) {
    for (const auto& s : corpus.sources) sources.push_back(&s);
  }
  OutputLock lock(o.out);
  StreamOptions opt;
  opt.modalities = cfg.modalities;
  opt.speed = o.speed;
  opt.pipelined = o.pipelined;
  std::string out = nlohmann::json{{"checkpoint_id", checkpoint_id(ck)}, {"run_config", cfg}}.dump() + "\n";
  std::size_t n = 0;
  for (const auto* s : sources) {
    for (const auto& e : run_stream(s->timeline, cfg.window, ck, opt)) {
      nlohmann::json j = event_to_json(e, o.latency);
      j["source_id"] = s->id();
      j["action"] = action_to_json(act(e));
      out += j.dump() + "\n";
      ++n;
    }
  }
  binary::write_file(path_in(o.out, "events.jsonl"), out);
  log << n << " decisions from " << sources.size() << " sources\n";
}

/// Runs the built-in oracle checks; returns false when any fails.
inline bool cmd_verify(const RunConfig& cfg, const CliOptions& o, std::ostream& log) {
  using namespace cli_detail;
  const auto results = run_all_checks();
  bool ok = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
    arr.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  if (!o.out.empty()) {
    OutputLock lock(o.out);
    write_json(path_in(o.out, "verify.json"), {{"checks", arr}, {"passed", ok}, {"run_config", cfg}});
  }
  return ok;
}

inline void print_error(std::ostream& err, ErrorCode code, const std::string& message) {
  err << nlohmann::json{{"error", {{"code", error_code_name(code)}, {"message", message}}}}.dump() << "\n";
}

/// Exit codes: 0 success, 1 runtime failure (or failed verify), 2 usage.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"mmw2s: when-to-speak classification over video, audio and text streams", "mmw2s"};
  app.require_subcommand(1);
  CliOptions o;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config_path, "JSON run config");
    s->add_option("--seed", o.seed, "global seed");
    s->add_option("--window-s", o.window_s, "window length in seconds");
    s->add_option("--stride-s", o.stride_s, "stride in seconds");
    s->add_option("--modalities", o.modalities, "e.g. text or video,audio,text");
    s->add_option("--attention", o.attention, "on|off");
    s->add_option("--out", o.out, "output directory");
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  common(synth);
  synth->add_option("--n-sources", o.n_sources);
  synth->add_option("--noise", o.noise);
  auto* build = app.add_subcommand("build", "label a corpus into a clip manifest");
  common(build);
  build->add_option("--corpus", o.corpus);
  build->add_option("--mode", o.mode, "short_clips|full_videos");
  build->add_option("--per-class", o.per_class, "clips per label instead of the configured quota");
  auto* train = app.add_subcommand("train", "fine-tune a model on a manifest's train split");
  common(train);
  train->add_option("--corpus", o.corpus);
  train->add_option("--manifest", o.manifest, "directory written by build");
  train->add_option("--max-steps", o.max_steps);
  train->add_option("--init", o.init, "checkpoint to continue from");
  auto* eval = app.add_subcommand("eval", "score a checkpoint or run the ablation table");
  common(eval);
  eval->add_option("--corpus", o.corpus);
  eval->add_option("--manifest", o.manifest);
  eval->add_option("--checkpoint", o.checkpoint);
  eval->add_option("--mode", o.mode, "short_clips|full_videos");
  eval->add_option("--source", o.sources, "restrict full-videos mode to these sources");
  eval->add_flag("--ablation", o.ablation, "train and score every ablation cell");
  auto* stream = app.add_subcommand("stream", "replay sources through the streaming engine");
  common(stream);
  stream->add_option("--corpus", o.corpus);
  stream->add_option("--checkpoint", o.checkpoint);
  stream->add_option("--source", o.sources);
  stream->add_option("--speed", o.speed, "replay speed, 0 = as fast as possible");
  stream->add_flag("--pipelined", o.pipelined);
  stream->add_flag("--latency", o.latency, "include per-decision latency_ms");
  auto* verify = app.add_subcommand("verify", "run the built-in oracle checks");
  common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    log << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, ErrorCode::kUsage, e.what());
    return 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    const RunConfig cfg = cli_detail::resolve_config(o, name);
    if (name == "synth") cmd_synth(cfg, o, log);
    if (name == "build") cmd_build(cfg, o, log);
    if (name == "train") cmd_train(cfg, o, log);
    if (name == "eval") cmd_eval(cfg, o, log);
    if (name == "stream") cmd_stream(cfg, o, log);
    if (name == "verify" && !cmd_verify(cfg, o, log)) return 1;
    return 0;
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return e.code() == ErrorCode::kUsage ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(err, ErrorCode::kIo, e.what());
    return 1;
  }
}

}  // namespace mmw2s
