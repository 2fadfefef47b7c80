/* Copyright 2026 The fairprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fairprompt/cli.h"

#include <glob.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "fairprompt/analysis.h"
#include "fairprompt/evaluation.h"
#include "fairprompt/manifest.h"
#include "fairprompt/pool.h"
#include "fairprompt/refine.h"
#include "fairprompt/schema.h"
#include "fairprompt/sim_backend.h"
#include "fairprompt/wire.h"

namespace fairprompt {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return kExitBadArgs;
    case ErrorCode::kConfig:
    case ErrorCode::kParse:
      return kExitConfig;
    case ErrorCode::kTransport:
    case ErrorCode::kAuth:
    case ErrorCode::kRateLimited:
    case ErrorCode::kMalformedResponse:
      return kExitBackend;
    case ErrorCode::kAborted: return kExitAborted;
    case ErrorCode::kCapability: return kExitCapability;
    case ErrorCode::kIo:
    case ErrorCode::kNotFound:
      return kExitIo;
  }
  return kExitInternal;
}

std::vector<std::string> replayable_args(const std::vector<std::string>& args) {
  static const std::vector<std::string> kDrop = {"--out", "--pool", "--timestamp"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    bool dropped = false;
    for (const auto& d : kDrop) {
      if (args[i] == d) {
        ++i;
        dropped = true;
        break;
      }
      if (args[i].starts_with(d + "=")) {
        dropped = true;
        break;
      }
    }
    if (!dropped) out.push_back(args[i]);
  }
  return out;
}

std::string make_run_id(std::string_view command, std::string_view profession,
                        const std::vector<std::string>& args,
                        std::string_view timestamp) {
  json material = {{"command", command}, {"args", args}, {"timestamp", timestamp}};
  std::string id(command);
  if (!trim(profession).empty()) id += "-" + slugify(profession);
  return id + "-" + sha256_hex(material.dump()).substr(0, 12);
}

namespace {

struct CommonArgs {
  std::string backend = "sim";
  std::uint64_t seed = 0;
  std::string config;
  std::string schema;
  std::string areas;
  std::string bias_profile;
  std::string out = "runs";
  std::string pool;
  std::string religion_mode = "attire";
  int sim_faces = 1;
  std::size_t concurrency = 8;
  std::string timestamp;
  std::string format = "table";
};

struct CotGenArgs {
  std::string profession;
  std::optional<double> tau;
  std::optional<int> max_iter;
  std::optional<int> images;
  std::string aggregation;
  bool multiface = false;
};

struct InferArgs {
  std::string profession;
  std::string strategy = "area";
  int n_prompts = 20;
  bool multiface = false;
};

struct EvaluateArgs {
  std::string images;
  std::string gold;
  std::string predictions;
  bool multiface = false;
};

struct AnalyzeArgs {
  std::vector<std::string> manifests;
  std::string report;
};

struct ReplayArgs {
  std::string manifest;
  bool keep = false;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8765;
};

struct ConfigArgs {
  std::string what = "run";
};

// Everything a run needs once configuration is resolved.
struct Run {
  AttributeSchema schema;
  ProfessionAreaMap areas;
  RunConfig config;
  std::optional<BiasProfile> profile;
  ReligionMode religion_mode = ReligionMode::kAttire;
  std::string timestamp;
  std::string run_id;
  fs::path run_dir;
  fs::path pool_path;
  std::shared_ptr<ManifestWriter> manifest;
  BackendSet backends;
};

AttributeSchema resolve_schema(const CommonArgs& c) {
  AttributeSchema s = c.schema.empty() ? AttributeSchema::defaults()
                                       : load_schema(c.schema);
  s.validate();
  return s;
}

RunConfig resolve_config(const CommonArgs& c, const CotGenArgs* overrides) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  cfg.rng_seed = c.seed;
  if (overrides) {
    if (overrides->tau) cfg.tau = *overrides->tau;
    if (overrides->max_iter) cfg.max_iterations = *overrides->max_iter;
    if (overrides->images) cfg.images_per_prompt = *overrides->images;
    if (!overrides->aggregation.empty()) {
      cfg.fairness_aggregation = parse_aggregation(overrides->aggregation);
    }
  }
  cfg.validate();
  return cfg;
}

BiasProfile resolve_profile(const CommonArgs& c, const AttributeSchema& schema) {
  BiasProfile p = c.bias_profile.empty()
                      ? BiasProfile::defaults(schema)
                      : bias_profile_from_json(json::parse(read_text_file(c.bias_profile)));
  p.seed = substream_seed(c.seed, "generation");
  p.faces_per_image = c.sim_faces;
  p.validate(schema);
  return p;
}

BackendSet build_backends(const CommonArgs& c, const Run& run,
                          std::shared_ptr<ImageStore> store,
                          std::shared_ptr<CallRecorder> recorder) {
  if (c.backend == "sim") return make_sim_backends(run.schema, *run.profile, store);
  BackendSet set = make_remote_backends(store, recorder);
  if (!set.generator && !set.reasoner && !set.text_embedder && !set.detector) {
    throw Error(ErrorCode::kConfig,
                "no backend URL configured; set FAIRPROMPT_BACKEND_URL or "
                "FAIRPROMPT_<PORT>_URL",
                "backend");
  }
  return set;
}

// Resolves configuration, creates <out>/<run-id>/ and writes the header.
Run prepare_run(const CommonArgs& c, std::string_view command,
                const std::string& profession, const std::vector<std::string>& args,
                const CotGenArgs* overrides, json options, bool needs_backend = true,
                std::optional<fs::path> image_dir = std::nullopt) {
  if (c.backend != "sim" && c.backend != "remote") {
    throw Error(ErrorCode::kInvalidArgument,
                "backend must be 'sim' or 'remote', got '" + c.backend + "'",
                "backend");
  }
  Run run;
  run.schema = resolve_schema(c);
  run.areas = c.areas.empty() ? ProfessionAreaMap::defaults()
                              : load_profession_areas(c.areas);
  run.areas.validate();
  run.config = resolve_config(c, overrides);
  run.religion_mode = parse_religion_mode(c.religion_mode);
  if (c.backend == "sim") run.profile = resolve_profile(c, run.schema);

  run.timestamp = c.timestamp.empty() ? current_timestamp() : c.timestamp;
  const auto stable = replayable_args(args);
  run.run_id = make_run_id(command, profession, stable, run.timestamp);
  run.run_dir = fs::path(c.out) / run.run_id;
  run.pool_path = c.pool.empty() ? fs::path(c.out) / "pool.jsonl" : fs::path(c.pool);
  fs::create_directories(run.run_dir / "reports");
  run.manifest = std::make_shared<ManifestWriter>(run.run_dir / "manifest.jsonl",
                                                  run.schema);

  json backend = {{"kind", needs_backend ? c.backend : "none"}};
  if (needs_backend) {
    auto store = std::make_shared<ImageStore>(image_dir ? *image_dir
                                                        : run.run_dir / "images");
    run.backends = build_backends(c, run, store, run.manifest);
    backend["identities"] = run.backends.identities();
    if (run.profile) backend["bias_profile"] = to_json(*run.profile);
  }

  json header = {{"type", kRecordHeader},
                 {"format_version", kFormatVersion},
                 {"tool_version", kToolVersion},
                 {"run_id", run.run_id},
                 {"command", command},
                 {"profession", profession},
                 {"timestamp", run.timestamp},
                 {"seed", c.seed},
                 {"args", stable},
                 {"config", to_json(run.config)},
                 {"schema_digest", run.schema.digest()},
                 {"backend", std::move(backend)},
                 {"options", std::move(options)}};
  run.manifest->write(header);
  return run;
}

json error_final(const Error& e) {
  return {{"type", kRecordFinal},
          {"status", "error"},
          {"error",
           {{"code", error_code_name(e.code())},
            {"message", e.what()},
            {"key_path", e.key_path()},
            {"detail", e.detail()}}}};
}

EvaluationOptions evaluation_options(const CommonArgs& c, const Run& run,
                                     bool multiface) {
  EvaluationOptions o;
  o.multiface = multiface;
  o.religion_mode = run.religion_mode;
  o.neutral_in_religion = run.config.neutral_in_religion_entropy;
  o.aggregation = run.config.fairness_aggregation;
  o.concurrency = c.concurrency;
  return o;
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(data.data(), static_cast<std::streamsize>(data.size()))) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
}

void write_run_report(const Run& run, const CommonArgs& c, std::ostream& out) {
  const ReportFormat format = parse_report_format(c.format);
  std::vector<Manifest> ms{read_manifest(run.manifest->path())};
  const auto rows = report_rows(ms);
  write_file(run.run_dir / "reports" /
                 ("summary." + std::string(report_extension(format))),
             emit_report(rows, format));
  out << emit_report(rows, ReportFormat::kTableText);
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<LabelRow> prediction_rows(const BatchEvaluation& eval) {
  std::vector<LabelRow> rows;
  for (const auto& img : eval.images) {
    for (const auto& p : img.profiles) {
      std::string id = img.image.id;
      if (p.source.face_index) id += "#" + std::to_string(*p.source.face_index);
      for (const auto& call : p.calls) rows.push_back({id, call.attribute, call.category});
    }
  }
  return rows;
}

json evaluation_record(const BatchEvaluation& eval, const AttributeSchema& schema) {
  json images = json::array();
  for (const auto& img : eval.images) images.push_back(img.image.file_name());
  return {{"type", kRecordEvaluation},
          {"images", std::move(images)},
          {"faces", eval.faces},
          {"counts", counts_to_json(eval.counts, schema)},
          {"clip_t", eval.has_clip_t ? json(eval.clip_t) : json(nullptr)},
          {"metrics", eval.snapshot ? to_json(*eval.snapshot) : json(nullptr)}};
}

void print_metrics(std::ostream& out, const MetricSnapshot& m) {
  for (const auto& e : m.per_attribute_entropy) {
    out << "  " << e.attribute << " H'=" << fmt4(e.value) << "\n";
  }
  out << "  clip_t=" << fmt4(m.clip_t) << " fairness=" << fmt4(m.fairness_score)
      << "\n";
}

// Commands ---------------------------------------------------------------------

int cmd_cot_gen(const CommonArgs& c, const CotGenArgs& a,
                const std::vector<std::string>& args, std::ostream& out) {
  DemonstrationPool pool = DemonstrationPool::load(
      c.pool.empty() ? fs::path(c.out) / "pool.jsonl" : fs::path(c.pool));
  Run run = prepare_run(c, "cot-gen", a.profession, args, &a,
                        {{"multiface", a.multiface},
                         {"religion_mode", c.religion_mode},
                         {"sim_faces", c.sim_faces},
                         {"pool_size_before", pool.size()}});
  out << "run " << run.run_id << "\n";
  try {
    auto& reasoner = require_port(run.backends.reasoner, "reasoner");
    const PromptBank bank = PromptBank::embed(
        run.schema, require_port(run.backends.text_embedder, "text embedder"));
    BackendEvaluator evaluator(a.profession, run.config, run.backends, bank,
                               evaluation_options(c, run, a.multiface), run.run_id);
    const RefinementResult result = run_refinement(
        a.profession, run.config, reasoner, evaluator, run.manifest.get());
    for (const auto& it : result.iterations) {
      out << "t=" << it.index << " fairness=" << fmt4(it.metrics.fairness_score)
          << " clip_t=" << fmt4(it.metrics.clip_t)
          << " decision=" << to_string(it.decision) << "\n";
    }
    const CoTRecord& archived = pool.archive(result, run.run_id, run.areas);
    run.manifest->write({{"type", kRecordFinal},
                         {"status", "ok"},
                         {"iterations", result.iterations.size()},
                         {"selected_iteration", result.selected},
                         {"decision", to_string(result.iterations.back().decision)},
                         {"baseline", to_json(result.baseline)},
                         {"metrics", to_json(result.selected_record().metrics)},
                         {"archived_id", archived.id}});
    out << "selected t=" << result.selected << ", archived " << archived.id << "\n";
  } catch (const Error& e) {
    run.manifest->write(error_final(e));
    throw;
  }
  write_run_report(run, c, out);
  out << "manifest " << run.manifest->path().string() << "\n";
  return kExitOk;
}

int cmd_infer(const CommonArgs& c, const InferArgs& a,
              const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  const SelectionStrategy strategy = parse_selection_strategy(a.strategy);
  if (a.n_prompts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "must be positive", "n-prompts");
  }
  DemonstrationPool pool = DemonstrationPool::load(
      c.pool.empty() ? fs::path(c.out) / "pool.jsonl" : fs::path(c.pool));
  Run run = prepare_run(c, "infer", a.profession, args, nullptr,
                        {{"strategy", a.strategy},
                         {"n_prompts", a.n_prompts},
                         {"multiface", a.multiface},
                         {"religion_mode", c.religion_mode},
                         {"sim_faces", c.sim_faces},
                         {"pool_size_before", pool.size()}});
  out << "run " << run.run_id << "\n";
  try {
    const Selection sel = select_cot(pool, a.profession, strategy, c.seed,
                                     run.backends.text_embedder.get(), run.areas);
    const CoTRecord& chosen = pool.records()[sel.index];
    run.manifest->write({{"type", kRecordSelection},
                         {"requested", a.strategy},
                         {"used", to_string(sel.used)},
                         {"note", sel.note},
                         {"record", to_json(chosen)}});
    out << "selected " << chosen.id << " (" << chosen.profession << ", "
        << to_string(sel.used) << ")\n";
    if (!sel.note.empty()) err << "note: " << sel.note << "\n";

    auto& reasoner = require_port(run.backends.reasoner, "reasoner");
    Adaptation adapted;
    try {
      adapted = adapt_cot(chosen, a.profession, a.n_prompts, reasoner);
    } catch (const Error& e) {
      if (!e.detail().empty()) {
        run.manifest->write({{"type", kRecordAdaptation},
                             {"status", "error"},
                             {"raw_response", e.detail()}});
      }
      throw;
    }
    json transcript = json::array();
    for (const auto& m : adapted.transcript) {
      transcript.push_back({{"role", m.role}, {"content", m.content}});
    }
    run.manifest->write({{"type", kRecordAdaptation},
                         {"status", "ok"},
                         {"cot_text", adapted.cot_text},
                         {"prompts", adapted.prompts},
                         {"warnings", adapted.warnings},
                         {"transcript", std::move(transcript)}});
    for (const auto& w : adapted.warnings) err << "warning: " << w << "\n";

    auto& generator = require_port(run.backends.generator, "generator");
    std::vector<ImageRef> images(adapted.prompts.size());
    parallel_for(adapted.prompts.size(), c.concurrency, [&](std::size_t i) {
      const GenerationRequest req{adapted.prompts[i], adapted.cot_text, 1,
                                  run.run_id + "/p" + std::to_string(i)};
      auto refs = generator.generate(req);
      if (refs.size() != 1) {
        throw Error(ErrorCode::kMalformedResponse,
                    "generator returned " + std::to_string(refs.size()) +
                        " images for one request");
      }
      images[i] = refs[0];
    });

    const PromptBank bank = PromptBank::embed(
        run.schema, require_port(run.backends.text_embedder, "text embedder"));
    const BatchEvaluation eval = evaluate_images(
        images, adapted.prompts, run.backends, bank,
        evaluation_options(c, run, a.multiface));
    for (const auto& img : eval.images) run.manifest->write(to_json(img));
    run.manifest->write(evaluation_record(eval, run.schema));
    write_file(run.run_dir / "reports" / "predictions.csv",
               write_label_csv(prediction_rows(eval)));
    if (!eval.snapshot) {
      throw Error(ErrorCode::kAborted, "no countable faces; metrics are undefined");
    }
    run.manifest->write({{"type", kRecordFinal},
                         {"status", "ok"},
                         {"faces", eval.faces},
                         {"metrics", to_json(*eval.snapshot)}});
    out << "faces=" << eval.faces << "\n";
    print_metrics(out, *eval.snapshot);
  } catch (const Error& e) {
    run.manifest->write(error_final(e));
    throw;
  }
  write_run_report(run, c, out);
  out << "manifest " << run.manifest->path().string() << "\n";
  return kExitOk;
}

// Images and prompts referenced by a manifest: the selected iteration of a
// cot-gen run, otherwise the evaluated images.
void images_from_manifest(const Manifest& m, std::vector<ImageRef>& images,
                          std::vector<std::string>& prompts) {
  auto ref_of = [](const std::string& name) {
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? ImageRef{name, ""}
                                    : ImageRef{name.substr(0, dot), name.substr(dot + 1)};
  };
  if (m.header.value("command", "") == "cot-gen") {
    if (!m.final || !m.final->contains("selected_iteration")) {
      throw Error(ErrorCode::kInvalidArgument,
                  m.path.string() + " has no completed refinement");
    }
    const int sel = m.final->at("selected_iteration").get<int>();
    for (const auto& r : m.of_type(kRecordIteration)) {
      if (r.at("index").get<int>() != sel) continue;
      const IterationRecord it = iteration_from_json(r);
      images = it.images;
      prompts = it.prompts;
      return;
    }
    throw Error(ErrorCode::kParse, m.path.string() + ": selected iteration missing");
  }
  for (const auto& r : m.of_type(kRecordProfile)) {
    images.push_back(ref_of(r.at("image").get<std::string>()));
    prompts.push_back(r.at("prompt").get<std::string>());
  }
  bool all_prompts = !prompts.empty();
  for (const auto& p : prompts) all_prompts = all_prompts && !p.empty();
  if (!all_prompts) prompts.clear();
}

int cmd_evaluate(const CommonArgs& c, const EvaluateArgs& a,
                 const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  if (a.images.empty() == a.predictions.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "exactly one of --images or --predictions is required", "images");
  }
  std::optional<fs::path> image_dir;
  std::vector<ImageRef> images;
  std::vector<std::string> prompts;
  if (!a.images.empty()) {
    const fs::path src(a.images);
    if (fs::is_directory(src)) {
      image_dir = src;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(src)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name == "index.jsonl" || name.ends_with(".tmp")) continue;
        files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        std::string ext = f.extension().string();
        if (!ext.empty()) ext.erase(0, 1);
        images.push_back({f.stem().string(), ext});
      }
    } else if (fs::is_regular_file(src)) {
      const Manifest m = read_manifest(src);
      image_dir = src.parent_path() / "images";
      images_from_manifest(m, images, prompts);
    } else {
      throw Error(ErrorCode::kNotFound, "no such file or directory: " + a.images,
                  "images");
    }
  }

  Run run = prepare_run(c, "evaluate", "", args, nullptr,
                        {{"images", a.images},
                         {"gold", a.gold},
                         {"predictions", a.predictions},
                         {"multiface", a.multiface},
                         {"religion_mode", c.religion_mode}},
                        !a.images.empty(), image_dir);
  out << "run " << run.run_id << "\n";
  try {
    std::vector<LabelRow> predicted;
    std::optional<MetricSnapshot> snapshot;
    if (!a.images.empty()) {
      const PromptBank bank = PromptBank::embed(
          run.schema, require_port(run.backends.text_embedder, "text embedder"));
      const BatchEvaluation eval = evaluate_images(
          images, prompts, run.backends, bank, evaluation_options(c, run, a.multiface));
      for (const auto& img : eval.images) run.manifest->write(to_json(img));
      run.manifest->write(evaluation_record(eval, run.schema));
      predicted = prediction_rows(eval);
      snapshot = eval.snapshot;
      out << "images=" << images.size() << " faces=" << eval.faces << "\n";
      if (snapshot) print_metrics(out, *snapshot);
      if (!eval.has_clip_t) err << "note: prompts unknown; CLIP-T not computed\n";
    } else {
      predicted = read_label_csv(a.predictions);
    }
    write_file(run.run_dir / "reports" / "predictions.csv", write_label_csv(predicted));

    json agreements = json::array();
    if (!a.gold.empty()) {
      const auto gold = read_label_csv(a.gold);
      for (const auto& g : gold) {
        bool known = false;
        for (const auto& attr : run.schema.attributes) known = known || attr.name == g.attribute;
        if (!known) {
          throw Error(ErrorCode::kInvalidArgument,
                      "gold label has unknown attribute '" + g.attribute + "'", "gold");
        }
      }
      for (const auto& attr : run.schema.attributes) {
        bool present = false;
        for (const auto& g : gold) present = present || g.attribute == attr.name;
        if (!present) continue;
        const LabelAgreement ag =
            agreement_from_labels(predicted, gold, attr.name, attr.categories);
        const std::string text = format_agreement_report(ag);
        write_file(run.run_dir / "reports" / ("agreement-" + attr.name + ".txt"), text);
        out << text;
        std::vector<std::string> warnings;
        agreements.push_back({{"attribute", attr.name},
                              {"categories", ag.matrix.categories},
                              {"matrix", ag.matrix.counts},
                              {"overall_agreement", overall_agreement(ag.matrix)},
                              {"per_class_agreement", per_class_agreement(ag.matrix, &warnings)},
                              {"misclassification", misclassification(ag.matrix)},
                              {"warnings", warnings}});
      }
    }
    run.manifest->write({{"type", kRecordFinal},
                         {"status", "ok"},
                         {"metrics", snapshot ? to_json(*snapshot) : json(nullptr)},
                         {"agreement", std::move(agreements)}});
  } catch (const Error& e) {
    run.manifest->write(error_final(e));
    throw;
  }
  out << "manifest " << run.manifest->path().string() << "\n";
  return kExitOk;
}

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) {
      throw Error(ErrorCode::kIo, "cannot expand pattern '" + p + "'");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int cmd_analyze(const CommonArgs& c, const AnalyzeArgs& a, std::ostream& out) {
  const ReportFormat format = parse_report_format(c.format);
  std::vector<Manifest> manifests;
  for (const auto& p : expand_globs(a.manifests)) manifests.push_back(read_manifest(p));
  const std::string report = emit_report(report_rows(manifests), format);
  if (!a.report.empty()) {
    const fs::path path(a.report);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, report);
  }
  out << report;
  return kExitOk;
}

int cmd_replay(const CommonArgs& c, const ReplayArgs& a, std::ostream& out,
               std::ostream& err) {
  const fs::path manifest_path(a.manifest);
  const Manifest m = read_manifest(manifest_path);
  const std::string kind = m.header.at("backend").value("kind", "");
  if (kind == "remote") {
    throw Error(ErrorCode::kCapability,
                "replay needs a manifest produced by the simulated backend");
  }
  const std::string command = m.header.at("command").get<std::string>();
  const auto args = m.header.at("args").get<std::vector<std::string>>();
  const std::string timestamp = m.header.at("timestamp").get<std::string>();

  fs::path scratch = c.out != "runs" ? fs::path(c.out)
                                     : fs::temp_directory_path() /
                                           ("fairprompt-replay-" +
                                            m.header.value("run_id", "run") + "-" +
                                            std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  // Rebuild the pool as it was when the run started.
  const std::size_t pool_before =
      m.header.at("options").value("pool_size_before", std::size_t{0});
  const fs::path source_pool = c.pool.empty()
                                   ? manifest_path.parent_path().parent_path() / "pool.jsonl"
                                   : fs::path(c.pool);
  DemonstrationPool replay_pool(scratch / "pool.jsonl");
  if (pool_before > 0) {
    const DemonstrationPool original = DemonstrationPool::load(source_pool);
    if (original.size() < pool_before) {
      throw Error(ErrorCode::kNotFound,
                  "pool " + source_pool.string() + " has fewer than " +
                      std::to_string(pool_before) + " records");
    }
    for (std::size_t i = 0; i < pool_before; ++i) replay_pool.append(original.records()[i]);
  }

  std::vector<std::string> argv{"fairprompt", command};
  argv.insert(argv.end(), args.begin(), args.end());
  argv.insert(argv.end(), {"--out", scratch.string(), "--pool",
                           (scratch / "pool.jsonl").string(), "--timestamp", timestamp});
  std::ostringstream sink_out;
  std::ostringstream sink_err;
  const int rc = run_cli(argv, sink_out, sink_err);
  const fs::path replayed = scratch / m.header.at("run_id").get<std::string>() /
                            "manifest.jsonl";
  int result = kExitOk;
  if (!fs::exists(replayed)) {
    err << "replay produced no manifest (exit " << rc << ")\n" << sink_err.str();
    result = kExitReplayMismatch;
  } else {
    const std::string a_bytes = read_text_file(manifest_path);
    const std::string b_bytes = read_text_file(replayed);
    if (a_bytes == b_bytes) {
      out << "replay identical: " << manifest_path.string() << " ("
          << a_bytes.size() << " bytes, sha256 " << sha256_hex(a_bytes).substr(0, 16)
          << ")\n";
    } else {
      std::istringstream ia(a_bytes), ib(b_bytes);
      std::string la, lb;
      int line = 0;
      while (true) {
        ++line;
        const bool ga = static_cast<bool>(std::getline(ia, la));
        const bool gb = static_cast<bool>(std::getline(ib, lb));
        if (!ga || !gb || la != lb) break;
      }
      err << "replay differs from " << manifest_path.string() << " at line " << line
          << "\n";
      result = kExitReplayMismatch;
    }
  }
  if (!a.keep) fs::remove_all(scratch);
  return result;
}

int cmd_serve(const CommonArgs& c, const ServeArgs& a, std::ostream& out) {
  const AttributeSchema schema = resolve_schema(c);
  const BiasProfile profile = resolve_profile(c, schema);
  WireServer::Options opts;
  if (const char* key = std::getenv("FAIRPROMPT_API_KEY")) opts.api_key = key;
  WireServer server(make_sim_backends(schema, profile, std::make_shared<ImageStore>()),
                    opts);
  out << "serving simulated backend on http://" << a.host << ":" << a.port << "\n"
      << std::flush;
  server.listen(a.host, a.port);
  return kExitOk;
}

int cmd_config(const CommonArgs& c, const ConfigArgs& a, std::ostream& out) {
  const AttributeSchema schema = resolve_schema(c);
  if (a.what == "run") {
    out << to_json(resolve_config(c, nullptr)).dump(2) << "\n";
  } else if (a.what == "schema") {
    out << schema.canonical();
  } else if (a.what == "areas") {
    const auto areas = c.areas.empty() ? ProfessionAreaMap::defaults()
                                       : load_profession_areas(c.areas);
    out << areas.canonical();
  } else if (a.what == "bias-profile") {
    out << to_json(resolve_profile(c, schema)).dump(2) << "\n";
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown config section '" + a.what +
                    "' (expected run, schema, areas or bias-profile)");
  }
  return kExitOk;
}

void add_common(CLI::App* sub, CommonArgs& c, bool backend = true) {
  if (backend) {
    sub->add_option("--backend", c.backend, "sim or remote")->capture_default_str();
    sub->add_option("--sim-faces", c.sim_faces, "faces per simulated image")
        ->capture_default_str();
    sub->add_option("--bias-profile", c.bias_profile, "simulated bias profile JSON");
    sub->add_option("--concurrency", c.concurrency, "per-port fan-out")
        ->capture_default_str();
  }
  sub->add_option("--seed", c.seed, "root RNG seed")->capture_default_str();
  sub->add_option("--config", c.config, "run config JSON");
  sub->add_option("--schema", c.schema, "attribute schema JSON");
  sub->add_option("--areas", c.areas, "profession area map JSON");
  sub->add_option("--out", c.out, "output root")->capture_default_str();
  sub->add_option("--pool", c.pool, "demonstration pool (default <out>/pool.jsonl)");
  sub->add_option("--religion-mode", c.religion_mode, "attire or vanilla")
      ->capture_default_str();
  sub->add_option("--format", c.format, "report format: table, csv or jsonl")
      ->capture_default_str();
  sub->add_option("--timestamp", c.timestamp)->group("");
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Iterative chain-of-thought prompt debiasing for text-to-image models",
               "fairprompt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CommonArgs common;
  CotGenArgs cot;
  InferArgs infer;
  EvaluateArgs evaluate;
  AnalyzeArgs analyze;
  ReplayArgs replay;
  ServeArgs serve;
  ConfigArgs config;

  auto* cot_cmd = app.add_subcommand("cot-gen", "refine a chain of thought and archive it");
  cot_cmd->add_option("--profession", cot.profession, "profession")->required();
  cot_cmd->add_option("--tau", cot.tau, "alignment retention fraction in (0, 1]");
  cot_cmd->add_option("--max-iter", cot.max_iter, "maximum refinement iterations");
  cot_cmd->add_option("--images", cot.images, "images per iteration");
  cot_cmd->add_option("--aggregation", cot.aggregation, "mean or min");
  cot_cmd->add_flag("--multiface", cot.multiface, "count every detected face");
  add_common(cot_cmd, common);

  auto* infer_cmd = app.add_subcommand("infer", "adapt an archived chain of thought");
  infer_cmd->add_option("--profession", infer.profession, "profession")->required();
  infer_cmd->add_option("--strategy", infer.strategy, "area, cosine or random")
      ->capture_default_str();
  infer_cmd->add_option("--n-prompts", infer.n_prompts, "number of prompts")
      ->capture_default_str();
  infer_cmd->add_flag("--multiface", infer.multiface, "count every detected face");
  add_common(infer_cmd, common);

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate images or predictions");
  eval_cmd->add_option("--images", evaluate.images, "image directory or manifest");
  eval_cmd->add_option("--predictions", evaluate.predictions, "prediction label CSV");
  eval_cmd->add_option("--gold", evaluate.gold, "gold label CSV");
  eval_cmd->add_flag("--multiface", evaluate.multiface, "count every detected face");
  add_common(eval_cmd, common);

  auto* analyze_cmd = app.add_subcommand("analyze", "summarize manifests as a table");
  analyze_cmd->add_option("--manifests", analyze.manifests, "manifest paths or globs");
  analyze_cmd->add_option("--report", analyze.report, "also write the report here");
  analyze_cmd->add_option("--format", common.format, "table, csv or jsonl")
      ->capture_default_str();

  auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare bytes");
  replay_cmd->add_option("--manifest", replay.manifest, "manifest to replay")->required();
  replay_cmd->add_option("--pool", common.pool, "pool the run read from");
  replay_cmd->add_option("--out", common.out, "scratch directory");
  replay_cmd->add_flag("--keep", replay.keep, "keep the scratch directory");

  auto* serve_cmd = app.add_subcommand("serve", "serve the simulated backend over HTTP");
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str();
  serve_cmd->add_option("--seed", common.seed)->capture_default_str();
  serve_cmd->add_option("--schema", common.schema);
  serve_cmd->add_option("--bias-profile", common.bias_profile);
  serve_cmd->add_option("--sim-faces", common.sim_faces)->capture_default_str();

  auto* config_cmd = app.add_subcommand("config", "print resolved configuration");
  config_cmd->add_option("section", config.what, "run, schema, areas or bias-profile")
      ->capture_default_str();
  add_common(config_cmd, common);

  std::vector<std::string> rev;
  for (std::size_t i = argv.size(); i > 1; --i) rev.push_back(argv[i - 1]);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadArgs;
  }
  const std::vector<std::string> sub_args(argv.begin() + std::min<std::size_t>(2, argv.size()),
                                          argv.end());
  try {
    if (cot_cmd->parsed()) return cmd_cot_gen(common, cot, sub_args, out);
    if (infer_cmd->parsed()) return cmd_infer(common, infer, sub_args, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(common, evaluate, sub_args, out, err);
    if (analyze_cmd->parsed()) return cmd_analyze(common, analyze, out);
    if (replay_cmd->parsed()) return cmd_replay(common, replay, out, err);
    if (serve_cmd->parsed()) return cmd_serve(common, serve, out);
    if (config_cmd->parsed()) return cmd_config(common, config, out);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]";
    if (!e.key_path().empty()) err << " " << e.key_path() << ":";
    err << " " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    err << "error [parse] " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error [io] " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error [internal] " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitBadArgs;
}

}  // namespace fairprompt
