/*
 * Copyright 2026 The refrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver: ingest, embed, train, adapt, retrieve, eval, baseline,
// gradcheck and synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "refrank/refrank.hpp"

namespace fs = std::filesystem;
using namespace refrank;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config;
  std::string corpus;
  std::string out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

void AddCommon(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
  cmd->add_option("--config", o.config, "Run config file")->check(CLI::ExistingFile);
  cmd->add_option("--corpus", o.corpus, "Corpus directory (overrides [paths] corpus)");
  if (with_out) cmd->add_option("--out", o.out, "Output directory (overrides [paths] out)");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Run seed (overrides [run] seed)");
}

RunConfig MakeConfig(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : LoadRunConfig(o.config);
  if (!o.corpus.empty()) cfg.corpus_dir = o.corpus;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  return cfg;
}

Corpus RequireCorpus(const RunConfig& cfg) {
  if (cfg.corpus_dir.empty()) {
    throw Error(ErrorCode::kUsage, "no corpus directory; pass --corpus or set [paths] corpus");
  }
  return LoadCorpusDir(cfg.corpus_dir);
}

std::vector<fs::path> StoreFiles(const RunConfig& cfg) {
  if (cfg.embedder.kind == EmbedderKind::kExternalFile) {
    return {cfg.embedder.query_store, cfg.embedder.key_store};
  }
  return {cfg.EmbeddingsDir() / kQueryStoreFile, cfg.EmbeddingsDir() / kKeyStoreFile};
}

// "--out x.jsonl" names a file; anything else names a directory that gets
// the default file name.
fs::path OutputFile(const fs::path& out, const char* default_name) {
  const auto ext = out.extension();
  if (ext == ".json" || ext == ".jsonl") return out;
  return out / default_name;
}

fs::path OutputDir(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

std::ofstream OpenForWrite(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::vector<const TalkRecord*> TalksOfSplit(const Corpus& corpus, const std::string& split) {
  return FilterSplit(corpus, ParseSplit(split)).talks;
}

// One talk id per line; blank lines ignored.
std::vector<const TalkRecord*> TalksFromFile(const Corpus& corpus, const fs::path& path) {
  auto in = detail::OpenForRead(path);
  std::vector<const TalkRecord*> talks;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto id = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    const TalkRecord* t = corpus.FindTalk(id);
    if (t == nullptr) throw Error(ErrorCode::kUnknownId, "talk '" + id + "' in " + path.string());
    talks.push_back(t);
  }
  if (talks.empty()) throw Error(ErrorCode::kEmptyInput, path.string() + " lists no talks");
  return talks;
}

nlohmann::ordered_json MacroSummary(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["query_count"] = report.query_count;
  for (const auto& col : report.columns) j[col] = RoundPercent(report.macro.at(col));
  return j;
}

struct IngestOptions {
  std::string talks;
  std::string papers;
  std::string citations;
  std::string splits;
};

// Loads from four explicit files when given, otherwise from the corpus
// directory; writes a normalized copy under <out>/corpus and stats.json.
int RunIngest(const CommonOptions& o, const IngestOptions& in) {
  const RunConfig cfg = MakeConfig(o);
  const int given = !in.talks.empty() + !in.papers.empty() + !in.citations.empty() +
                    !in.splits.empty();
  if (given != 0 && given != 4) {
    throw Error(ErrorCode::kUsage, "pass all of --talks --papers --citations --splits or none");
  }
  const std::vector<fs::path> files =
      given == 4 ? std::vector<fs::path>{in.talks, in.papers, in.citations, in.splits}
                 : CorpusFiles(cfg.corpus_dir);
  if (given == 0 && cfg.corpus_dir.empty()) {
    throw Error(ErrorCode::kUsage, "no corpus; pass --corpus or the four file flags");
  }
  RunManifest manifest{"ingest", cfg, cfg.seed, files};
  manifest.Write(cfg.out_dir);
  const Corpus corpus = LoadCorpus(files[0], files[1], files[2], files[3]);
  SaveCorpus(corpus, fs::path(cfg.out_dir) / "corpus");
  const auto stats = StatsToJson(ComputeStats(corpus));
  OpenForWrite(fs::path(cfg.out_dir) / "stats.json") << stats.dump(2) << '\n';
  std::cout << stats.dump() << '\n';
  return 0;
}

int RunEmbed(const CommonOptions& o) {
  const RunConfig cfg = MakeConfig(o);
  const Corpus corpus = RequireCorpus(cfg);
  RunManifest manifest{"embed", cfg, cfg.seed, CorpusFiles(cfg.corpus_dir)};
  if (cfg.embedder.kind == EmbedderKind::kExternalFile) {
    for (const auto& p : StoreFiles(cfg)) manifest.inputs.push_back(p);
  }
  manifest.Write(cfg.out_dir);
  const EmbeddedCorpus e = cfg.embedder.kind == EmbedderKind::kExternalFile
                               ? EmbeddedCorpus{LoadStore(cfg.embedder.query_store),
                                                LoadStore(cfg.embedder.key_store)}
                               : EmbedCorpus(corpus, cfg);
  const EncodedTable table = TableFromStores(corpus, e);
  IndexFromTable(corpus, table);
  SaveEmbeddedCorpus(e, cfg.EmbeddingsDir());
  nlohmann::ordered_json summary;
  summary["embeddings"] = cfg.EmbeddingsDir().string();
  summary["query_rows"] = e.queries.size();
  summary["key_rows"] = e.keys.size();
  summary["dim"] = e.queries.dim();
  std::cout << summary.dump() << '\n';
  return 0;
}

int RunTrain(const CommonOptions& o, const std::string& stage_name, const std::string& init) {
  const Stage stage = ParseStage(stage_name);
  RunConfig cfg = MakeConfig(o);
  if (!init.empty()) cfg.init_checkpoint = init;
  const Corpus corpus = RequireCorpus(cfg);

  RunManifest manifest{stage == Stage::kMain ? "train" : "adapt", cfg, cfg.seed,
                       CorpusFiles(cfg.corpus_dir)};
  for (const auto& p : StoreFiles(cfg)) manifest.inputs.push_back(p);
  if (!cfg.init_checkpoint.empty()) manifest.inputs.push_back(cfg.init_checkpoint);
  manifest.extra["stage"] = stage_name;
  manifest.Write(cfg.out_dir);

  const EmbeddedCorpus e = ObtainEmbeddings(corpus, cfg);
  TrainingData data;
  data.table = TableFromStores(corpus, e);
  const PaperIndex index = IndexFromTable(corpus, data.table);
  data.index = &index;
  data.citations = &corpus.citations();
  data.temporal = cfg.temporal;
  auto talks_for = [&](Split split) {
    std::vector<const TalkRecord*> talks = FilterSplit(corpus, split).talks;
    if (stage == Stage::kDomainAdapt) {
      std::erase_if(talks, [&](const TalkRecord* t) {
        return data.table.keys.count(AbstractKeyId(t->id)) == 0;
      });
      if (talks.empty()) {
        throw Error(ErrorCode::kEmptySplit,
                    std::string(SplitName(split)) + " has no talk with an abstract");
      }
    }
    return EncodeTalks(talks, data.table);
  };
  data.train = talks_for(Split::kTrain);
  data.dev = talks_for(Split::kDev);

  DualEncoderHeads heads = cfg.init_checkpoint.empty()
                               ? InitHeads(data.table, cfg)
                               : LoadCheckpoint(cfg.init_checkpoint).heads;
  if (heads.query_dim != QueryDim(data.table) || heads.key_dim != KeyDim(data.table)) {
    throw Error(ErrorCode::kDimMismatch, "checkpoint dims do not match the embeddings");
  }

  const fs::path out(cfg.out_dir);
  const std::string prefix = stage == Stage::kMain ? "train" : "adapt";
  auto log = OpenForWrite(out / (prefix + "_log.jsonl"));
  const TrainResult result = Train(data, heads, cfg.train, stage, [&](const EpochLog& l) {
    log << l.ToJson().dump() << '\n';
    log.flush();
    std::cerr << l.ToJson().dump() << '\n';
  });
  const std::string stem = stage == Stage::kMain ? "main" : "adapt";
  SaveCheckpoint(result.best, out / "checkpoints" / (stem + "_best.ckpt"), cfg.Hash());
  SaveCheckpoint(result.last, out / "checkpoints" / (stem + "_last.ckpt"), cfg.Hash());
  nlohmann::ordered_json summary;
  summary["stage"] = stage_name;
  summary["best_epoch"] = result.best_epoch;
  summary["epochs_run"] = result.log.size() - 1;
  summary["early_stopped"] = result.early_stopped;
  summary["checkpoint"] = (out / "checkpoints" / (stem + "_best.ckpt")).string();
  std::cout << summary.dump() << '\n';
  return 0;
}

struct RetrieveOptions {
  std::string index;
  std::string queries;
  std::string split = "test";
  std::string checkpoint;
  std::optional<std::size_t> k;
  std::string temporal;
  std::string out;
};

int RunRetrieve(const CommonOptions& o, const RetrieveOptions& r) {
  RunConfig cfg = MakeConfig(o);
  if (r.k) cfg.retrieve_k = *r.k;
  if (!r.temporal.empty()) cfg.temporal = ParseTemporalMode(r.temporal);
  if (cfg.retrieve_k == 0) throw Error(ErrorCode::kUsage, "k must be >= 1");
  const Corpus corpus = RequireCorpus(cfg);
  const fs::path results_path = OutputFile(r.out.empty() ? cfg.out_dir : r.out, "results.jsonl");

  RunManifest manifest{"retrieve", cfg, cfg.seed, CorpusFiles(cfg.corpus_dir)};
  if (!r.index.empty()) {
    manifest.inputs.push_back(fs::path(r.index) / kQueryStoreFile);
    manifest.inputs.push_back(fs::path(r.index) / kKeyStoreFile);
  } else {
    for (const auto& p : StoreFiles(cfg)) manifest.inputs.push_back(p);
  }
  if (!r.checkpoint.empty()) manifest.inputs.push_back(r.checkpoint);
  if (!r.queries.empty()) manifest.inputs.push_back(r.queries);
  manifest.Write(OutputDir(results_path));

  const EmbeddedCorpus e =
      r.index.empty() ? ObtainEmbeddings(corpus, cfg)
                      : EmbeddedCorpus{LoadStore(fs::path(r.index) / kQueryStoreFile),
                                       LoadStore(fs::path(r.index) / kKeyStoreFile)};
  const EncodedTable table = TableFromStores(corpus, e);
  const PaperIndex index = IndexFromTable(corpus, table);
  const DualEncoderHeads heads =
      r.checkpoint.empty() ? InitHeads(table, cfg) : LoadCheckpoint(r.checkpoint).heads;
  const auto talks = r.queries.empty() ? TalksOfSplit(corpus, r.split)
                                       : TalksFromFile(corpus, r.queries);
  const auto run = RetrieveTalks(heads, index, EncodeTalks(talks, table), cfg.retrieve_k,
                                 cfg.temporal, cfg.workers);
  auto out = OpenForWrite(results_path);
  WriteResults(run, out);
  std::cout << "{\"results\":\"" << results_path.string() << "\",\"queries\":" << run.size()
            << "}\n";
  return 0;
}

struct EvalOptions {
  std::string results;
  std::string citations;
  std::string ks;
  std::string out;
};

int RunEval(const CommonOptions& o, const EvalOptions& ev) {
  RunConfig cfg = MakeConfig(o);
  if (!ev.ks.empty()) cfg.eval_ks = ParseCutoffs("--ks", ev.ks);
  if (ev.citations.empty() && cfg.corpus_dir.empty()) {
    throw Error(ErrorCode::kUsage, "eval needs --citations or a corpus");
  }
  const fs::path report_path = OutputFile(ev.out.empty() ? cfg.out_dir : ev.out, "report.json");
  RunManifest manifest{"eval", cfg, cfg.seed, {ev.results}};
  if (!ev.citations.empty()) {
    manifest.inputs.push_back(ev.citations);
  } else {
    for (const auto& p : CorpusFiles(cfg.corpus_dir)) manifest.inputs.push_back(p);
  }
  manifest.Write(OutputDir(report_path));

  auto in = detail::OpenForRead(ev.results);
  const auto run = ReadResults(in, ev.results);
  RelevanceJudgments judgments;
  if (!cfg.corpus_dir.empty() && (ev.citations.empty() || cfg.filter_gold_by_year)) {
    const Corpus corpus = LoadCorpusDir(cfg.corpus_dir);
    std::vector<const TalkRecord*> talks;
    for (const auto& list : run) {
      const TalkRecord* t = corpus.FindTalk(list.talk_id);
      if (t == nullptr) throw Error(ErrorCode::kUnknownId, "talk '" + list.talk_id + "'");
      talks.push_back(t);
    }
    judgments = BuildJudgments(corpus, talks, cfg.filter_gold_by_year, cfg.temporal);
  } else {
    auto cin = detail::OpenForRead(ev.citations);
    judgments = JudgmentsFromCitations(ParseCitations(cin, ev.citations));
  }
  const MetricsReport report = EvaluateRun(run, judgments, cfg.eval_ks);
  OpenForWrite(report_path) << ReportToJson(report).dump(2) << '\n';
  std::cout << MacroSummary(report).dump() << '\n';
  return 0;
}

struct BaselineOptions {
  std::string split = "test";
  std::optional<std::size_t> k;
  std::string ks;
};

int RunBaseline(const CommonOptions& o, const BaselineOptions& b) {
  RunConfig cfg = MakeConfig(o);
  if (b.k) cfg.retrieve_k = *b.k;
  if (!b.ks.empty()) cfg.eval_ks = ParseCutoffs("--ks", b.ks);
  if (cfg.retrieve_k == 0) throw Error(ErrorCode::kUsage, "k must be >= 1");
  const Corpus corpus = RequireCorpus(cfg);
  RunManifest manifest{"baseline", cfg, cfg.seed, CorpusFiles(cfg.corpus_dir)};
  manifest.Write(cfg.out_dir);

  std::vector<std::string> source_talks;
  for (Split s : cfg.baseline_splits) {
    for (const TalkRecord* t : FilterSplit(corpus, s).talks) source_talks.push_back(t->id);
  }
  const auto ranking = FrequencyRanking(corpus.citations(), source_talks);
  const auto talks = TalksOfSplit(corpus, b.split);
  const auto run = FrequencyBaselineRun(corpus, ranking, talks, cfg.retrieve_k, cfg.temporal);
  const auto judgments = BuildJudgments(corpus, talks, cfg.filter_gold_by_year, cfg.temporal);
  const MetricsReport report = EvaluateRun(run, judgments, cfg.eval_ks);
  const fs::path out(cfg.out_dir);
  auto results = OpenForWrite(out / "results.jsonl");
  WriteResults(run, results);
  OpenForWrite(out / "report.json") << ReportToJson(report).dump(2) << '\n';
  std::cout << MacroSummary(report).dump() << '\n';
  return 0;
}

struct GradCheckOptions {
  std::size_t seeds = 5;
  std::uint64_t first_seed = 0;
  GradCheckShape shape;
  double h = 1e-3;
  double tolerance = 1e-4;
  std::string out;
};

int RunGradCheckCommand(const GradCheckOptions& g) {
  if (g.shape.talks == 0 || g.shape.max_chunks == 0 || g.shape.query_dim < 2 ||
      g.shape.key_dim < 2 || g.shape.papers == 0 || !(g.h > 0.0)) {
    throw Error(ErrorCode::kUsage, "gradcheck needs positive sizes, dims >= 2 and h > 0");
  }
  if (!g.out.empty()) {
    RunManifest manifest{"gradcheck", std::nullopt, g.first_seed, {}};
    manifest.extra["seeds"] = g.seeds;
    manifest.Write(g.out);
  }
  double worst = 0.0;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < g.seeds; ++s) {
    for (LossKind kind : {LossKind::kBce, LossKind::kSoftmaxDa}) {
      const GradCheckResult r = RunGradCheck(g.first_seed + s, kind, g.shape, g.h);
      worst = std::max(worst, r.max_rel_error);
      nlohmann::ordered_json row;
      row["seed"] = g.first_seed + s;
      row["loss"] = kind == LossKind::kBce ? "bce" : "softmax";
      row["params"] = r.analytic_grads.size();
      row["max_rel_error"] = r.max_rel_error;
      row["worst_param"] = r.worst_param;
      std::cout << row.dump() << '\n';
      rows.push_back(std::move(row));
    }
  }
  if (!g.out.empty()) {
    OpenForWrite(fs::path(g.out) / "gradcheck.json") << rows.dump(2) << '\n';
  }
  if (!(worst < g.tolerance)) {
    std::cerr << "gradcheck failed: max relative error " << worst << " >= " << g.tolerance
              << '\n';
    return kExitNumeric;
  }
  return 0;
}

int RunSynth(const SynthParams& params, const std::string& out) {
  params.Validate();
  RunManifest manifest{"synth", std::nullopt, params.seed, {}};
  manifest.extra["synth"] = {{"talks", params.talks},
                             {"papers", params.papers},
                             {"late_signal", params.late_signal},
                             {"chunk_size", params.chunk_size},
                             {"min_refs", params.min_refs},
                             {"max_refs", params.max_refs},
                             {"mentions_per_ref", params.mentions_per_ref}};
  manifest.Write(out);
  const Corpus corpus = GenerateSyntheticCorpus(params);
  SaveCorpus(corpus, out);
  std::cout << "{\"talks\":" << corpus.talks().size() << ",\"papers\":" << corpus.papers().size()
            << ",\"out\":\"" << out << "\"}\n";
  return 0;
}

int ExitCodeFor(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kNumeric: return kExitNumeric;
    case ErrorCategory::kData: return kExitData;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refrank: rank cited papers for talk transcripts with dense retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonOptions common;

  IngestOptions iopt;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus, normalize it, write stats.json");
  AddCommon(ingest, common);
  ingest->add_option("--talks", iopt.talks, "talks.jsonl")->check(CLI::ExistingFile);
  ingest->add_option("--papers", iopt.papers, "papers.jsonl")->check(CLI::ExistingFile);
  ingest->add_option("--citations", iopt.citations, "citations.jsonl")->check(CLI::ExistingFile);
  ingest->add_option("--splits", iopt.splits, "splits.jsonl")->check(CLI::ExistingFile);

  auto* embed = app.add_subcommand("embed", "Embed talks and papers into stores");
  AddCommon(embed, common);

  std::string stage = "main";
  std::string init;
  auto* train = app.add_subcommand("train", "Train aggregation and projection heads");
  AddCommon(train, common);
  train->add_option("--stage", stage, "main|adapt")->check(CLI::IsMember({"main", "adapt"}));
  train->add_option("--init", init, "Checkpoint to start from")->check(CLI::ExistingFile);

  auto* adapt = app.add_subcommand("adapt", "Domain adaptation on talk abstracts");
  AddCommon(adapt, common);
  adapt->add_option("--init", init, "Checkpoint to start from")->check(CLI::ExistingFile);

  RetrieveOptions ropt;
  auto* retrieve = app.add_subcommand("retrieve", "Rank papers for talks");
  AddCommon(retrieve, common, false);
  retrieve->add_option("--index", ropt.index, "Directory holding queries.rfrk and keys.rfrk")
      ->check(CLI::ExistingDirectory);
  retrieve->add_option("--queries", ropt.queries, "File with one talk id per line")
      ->check(CLI::ExistingFile);
  retrieve->add_option("--split", ropt.split, "Split to query when --queries is absent")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  retrieve->add_option("--checkpoint", ropt.checkpoint, "Trained heads")
      ->check(CLI::ExistingFile);
  retrieve->add_option("--k", ropt.k, "Results per talk");
  retrieve->add_option("--temporal", ropt.temporal, "inclusive|strict|none");
  retrieve->add_option("--out", ropt.out, "Output file or directory");

  EvalOptions eopt;
  auto* eval = app.add_subcommand("eval", "Score a results file");
  AddCommon(eval, common, false);
  eval->add_option("--results", eopt.results, "Results JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--citations", eopt.citations, "Citations JSONL")->check(CLI::ExistingFile);
  eval->add_option("--ks", eopt.ks, "Cutoffs, e.g. 10,20,50,100,200");
  eval->add_option("--out", eopt.out, "Output file or directory");

  BaselineOptions bopt;
  auto* baseline = app.add_subcommand("baseline", "Citation-frequency baseline");
  AddCommon(baseline, common);
  baseline->add_option("--split", bopt.split, "Split to evaluate")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  baseline->add_option("--k", bopt.k, "Results per talk");
  baseline->add_option("--ks", bopt.ks, "Cutoffs");

  GradCheckOptions gopt;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--seeds", gopt.seeds, "Number of seeds");
  gradcheck->add_option("--first-seed", gopt.first_seed, "First seed");
  gradcheck->add_option("--talks", gopt.shape.talks, "Talks per batch");
  gradcheck->add_option("--chunks", gopt.shape.max_chunks, "Maximum chunks per talk");
  gradcheck->add_option("--query-dim", gopt.shape.query_dim, "Chunk embedding dim");
  gradcheck->add_option("--key-dim", gopt.shape.key_dim, "Key embedding dim");
  gradcheck->add_option("--step", gopt.h, "Finite-difference step");
  gradcheck->add_option("--tolerance", gopt.tolerance, "Maximum relative error");
  gradcheck->add_option("--out", gopt.out, "Output directory");

  SynthParams sopt;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--talks", sopt.talks, "Number of talks");
  synth->add_option("--papers", sopt.papers, "Number of papers");
  synth->add_option("--seed", sopt.seed, "Generator seed");
  synth->add_flag("--late-signal", sopt.late_signal, "Keep planted tokens past the first chunk");
  synth->add_option("--chunk-size", sopt.chunk_size, "Chunk size the late signal must clear");
  synth->add_option("--min-refs", sopt.min_refs, "Minimum cited papers per talk");
  synth->add_option("--max-refs", sopt.max_refs, "Maximum cited papers per talk");
  synth->add_option("--mentions", sopt.mentions_per_ref, "Signature tokens mentioned per citation");
  synth->add_option("--out", synth_out, "Output corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return RunIngest(common, iopt);
    if (*embed) return RunEmbed(common);
    if (*train) return RunTrain(common, stage, init);
    if (*adapt) return RunTrain(common, "adapt", init);
    if (*retrieve) return RunRetrieve(common, ropt);
    if (*eval) return RunEval(common, eopt);
    if (*baseline) return RunBaseline(common, bopt);
    if (*gradcheck) return RunGradCheckCommand(gopt);
    if (*synth) return RunSynth(sopt, synth_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCodeFor(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: Io: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
