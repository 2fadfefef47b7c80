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

#include "fairprompt/sim_backend.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <regex>
#include <set>

#include "fairprompt/common.h"
#include "fairprompt/templates.h"

namespace fairprompt {

using nlohmann::json;

namespace {

constexpr int kMaxFaces = 12;
constexpr int kFaceSize = 96;

std::mt19937_64 seeded(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(substream_seed(seed, name));
}

double gaussian(std::mt19937_64& rng) {
  // Box-Muller on library-independent uniforms.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t index_at(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding can leave acc slightly below 1; fall back to the last category
  // with non-zero mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

// Systematic sampling: n evenly spaced points with one random offset are
// pushed through the CDF and then shuffled (Fisher-Yates). Every draw keeps
// the marginal distribution `probs`, and each category count is within one
// of n * p.
std::vector<std::size_t> systematic_sample(std::span<const double> probs,
                                           std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> out(n);
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = uniform01(rng) * step;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = index_at(probs, u0 + static_cast<double>(i) * step);
  }
  for (std::size_t i = n; i-- > 1;) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(out[i], out[std::min(j, i)]);
  }
  return out;
}

FaceBox face_slot(int j) {
  return {64 + (j % 4) * 240, 160 + (j / 4) * 320, kFaceSize, kFaceSize};
}

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
  if (from.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace

// BiasProfile ------------------------------------------------------------------

BiasProfile BiasProfile::defaults(const AttributeSchema& schema) {
  const std::map<std::string, std::vector<double>> known = {
      {"gender", {0.9, 0.1}},
      {"race", {0.7, 0.1, 0.1, 0.1}},
      {"age", {0.8, 0.2}},
      {"religion", {0.05, 0.1, 0.05, 0.8}},
  };
  const std::map<std::string, std::vector<std::string>> known_keywords = {
      {"gender", {"female", "male"}},
      {"race", {"white", "asian", "black", "indian"}},
      {"age", {"young", "old"}},
      {"religion", {"hijab", "cross", "bindi", "secular"}},
  };
  BiasProfile p;
  for (const auto& a : schema.attributes) {
    const std::size_t k = a.categories.size();
    auto it = known.find(a.name);
    if (it != known.end() && it->second.size() == k) {
      p.baseline[a.name] = it->second;
    } else {
      std::vector<double> w(k, 0.3 / static_cast<double>(k - 1));
      w[0] = 0.7;
      p.baseline[a.name] = std::move(w);
    }
    auto kw = known_keywords.find(a.name);
    if (kw != known_keywords.end() && kw->second.size() == k) {
      for (std::size_t c = 0; c < k; ++c) {
        p.keywords.push_back({kw->second[c], a.name, a.categories[c]});
      }
    } else {
      for (const auto& c : a.categories) {
        auto toks = word_tokens(c);
        if (toks.size() == 1) p.keywords.push_back({toks[0], a.name, c});
      }
    }
  }
  return p;
}

void BiasProfile::validate(const AttributeSchema& schema) const {
  for (const auto& a : schema.attributes) {
    auto it = baseline.find(a.name);
    if (it == baseline.end()) {
      throw Error(ErrorCode::kConfig, "missing baseline weights",
                  "baseline." + a.name);
    }
    if (it->second.size() != a.categories.size()) {
      throw Error(ErrorCode::kConfig,
                  "expected " + std::to_string(a.categories.size()) + " weights",
                  "baseline." + a.name);
    }
    double sum = 0.0;
    for (double w : it->second) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::kConfig, "weights must be non-negative",
                    "baseline." + a.name);
      }
      sum += w;
    }
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::kConfig, "weights sum to zero",
                  "baseline." + a.name);
    }
  }
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    const auto& k = keywords[i];
    const std::string path = "keywords[" + std::to_string(i) + "]";
    auto toks = word_tokens(k.keyword);
    if (toks.size() != 1 || toks[0] != k.keyword) {
      throw Error(ErrorCode::kConfig, "keyword must be one lower-case word",
                  path);
    }
    if (schema.attribute(k.attribute).index_of(k.category) < 0) {
      throw Error(ErrorCode::kConfig, "unknown category '" + k.category + "'",
                  path);
    }
  }
  if (!(mixing_weight >= 0.0 && mixing_weight <= 1.0)) {
    throw Error(ErrorCode::kConfig, "must be in [0, 1]", "mixing_weight");
  }
  if (!(noise >= 0.0)) throw Error(ErrorCode::kConfig, "must be >= 0", "noise");
  if (!(alignment > 0.0 && alignment < 1.0)) {
    throw Error(ErrorCode::kConfig, "must be in (0, 1)", "alignment");
  }
  if (!(alignment_drift >= 0.0 && alignment_drift *
        static_cast<double>(schema.attributes.size()) < 1.0)) {
    throw Error(ErrorCode::kConfig, "drift times attribute count must be < 1",
                "alignment_drift");
  }
  if (faces_per_image < 1 || faces_per_image > kMaxFaces) {
    throw Error(ErrorCode::kConfig,
                "must be in [1, " + std::to_string(kMaxFaces) + "]",
                "faces_per_image");
  }
  if (content_dim < 1) {
    throw Error(ErrorCode::kConfig, "must be positive", "content_dim");
  }
  if (image_size < 1024) {
    throw Error(ErrorCode::kConfig, "must be >= 1024", "image_size");
  }
}

std::vector<std::string> BiasProfile::keywords_for(
    std::string_view attribute) const {
  std::vector<std::string> out;
  for (const auto& k : keywords) {
    if (k.attribute == attribute &&
        std::find(out.begin(), out.end(), k.keyword) == out.end()) {
      out.push_back(k.keyword);
    }
  }
  return out;
}

double BiasProfile::max_recoverable_noise(const AttributeSchema& schema) const {
  // The per-attribute weight is smallest when no alignment drift applies.
  // Correct and wrong categories differ by that weight, and noise of norm e
  // moves their difference by at most sqrt(2) e.
  const double a = static_cast<double>(schema.attributes.size());
  const double beta = std::sqrt((1.0 - alignment * alignment) / a);
  return beta / std::numbers::sqrt2;
}

json to_json(const BiasProfile& p) {
  json kws = json::array();
  for (const auto& k : p.keywords) {
    kws.push_back(
        {{"keyword", k.keyword}, {"attribute", k.attribute}, {"category", k.category}});
  }
  return {{"baseline", p.baseline},
          {"keywords", std::move(kws)},
          {"mixing_weight", p.mixing_weight},
          {"seed", p.seed},
          {"noise", p.noise},
          {"alignment", p.alignment},
          {"alignment_drift", p.alignment_drift},
          {"faces_per_image", p.faces_per_image},
          {"content_dim", p.content_dim},
          {"image_size", p.image_size}};
}

BiasProfile bias_profile_from_json(const json& j) {
  BiasProfile p;
  try {
    j.at("baseline").get_to(p.baseline);
    for (const auto& k : j.at("keywords")) {
      p.keywords.push_back({k.at("keyword").get<std::string>(),
                            k.at("attribute").get<std::string>(),
                            k.at("category").get<std::string>()});
    }
    j.at("mixing_weight").get_to(p.mixing_weight);
    j.at("seed").get_to(p.seed);
    j.at("noise").get_to(p.noise);
    j.at("alignment").get_to(p.alignment);
    j.at("alignment_drift").get_to(p.alignment_drift);
    j.at("faces_per_image").get_to(p.faces_per_image);
    j.at("content_dim").get_to(p.content_dim);
    j.at("image_size").get_to(p.image_size);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what(), "bias_profile");
  }
  return p;
}

// SimWorld ---------------------------------------------------------------------

SimWorld::SimWorld(AttributeSchema schema, BiasProfile profile,
                   std::shared_ptr<ImageStore> store)
    : schema_(std::move(schema)),
      profile_(std::move(profile)),
      store_(std::move(store)) {
  schema_.validate();
  profile_.validate(schema_);
  if (!store_) store_ = std::make_shared<ImageStore>();
  for (const auto& a : schema_.attributes) {
    block_offset_.push_back(blocks_);
    blocks_ += a.categories.size();
  }
  content_dim_ = static_cast<std::size_t>(profile_.content_dim);
  for (std::size_t i = 0; i < schema_.attributes.size(); ++i) {
    const AttributeDef& a = schema_.attributes[i];
    for (std::size_t c = 0; c < a.categories.size(); ++c) {
      for (const auto& p : a.prompts.at(a.categories[c])) {
        prompt_block_.try_emplace(p, block_of(i, c));
      }
      if (a.is_religion) {
        for (const auto& p : schema_.religion_attire.at(a.categories[c])) {
          prompt_block_.try_emplace(p, block_of(i, c));
        }
      }
    }
  }
}

std::size_t SimWorld::block_of(std::size_t attribute,
                               std::size_t category) const {
  return block_offset_[attribute] + category;
}

int SimWorld::keyword_hits(std::size_t attribute, std::string_view text) const {
  const auto tokens = word_tokens(text);
  const std::set<std::string> present(tokens.begin(), tokens.end());
  int hits = 0;
  for (const auto& kw : profile_.keywords_for(schema_.attributes[attribute].name)) {
    if (present.contains(kw)) ++hits;
  }
  return hits;
}

std::vector<double> SimWorld::effective_distribution(
    std::size_t attribute, std::string_view text) const {
  const AttributeDef& a = schema_.attributes[attribute];
  std::vector<double> base = profile_.baseline.at(a.name);
  double sum = 0.0;
  for (double w : base) sum += w;
  const double k = static_cast<double>(base.size());
  const double mix =
      std::min(1.0, keyword_hits(attribute, text) * profile_.mixing_weight);
  for (double& w : base) w = (1.0 - mix) * (w / sum) + mix / k;
  return base;
}

std::vector<double> SimWorld::content_vector(const std::string& text) const {
  auto rng = seeded(profile_.seed, "content/" + sha256_hex(text));
  std::vector<double> v(content_dim_);
  double sq = 0.0;
  for (double& x : v) {
    x = gaussian(rng);
    sq += x * x;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

Embedding SimWorld::text_embedding(const std::string& text) const {
  std::vector<double> v(dim(), 0.0);
  if (auto it = prompt_block_.find(text); it != prompt_block_.end()) {
    v[it->second] = 1.0;
    return Embedding(std::move(v));
  }
  const auto c = content_vector(text);
  std::copy(c.begin(), c.end(), v.begin() + static_cast<long>(blocks_));
  return Embedding(std::move(v));
}

SimWorld::PlantedImage SimWorld::read_image(const ImageRef& ref) const {
  json j;
  try {
    j = json::parse(store_->read(ref));
    if (j.at("format") != "fairprompt-sim-image") throw std::runtime_error("");
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "not a simulated image",
                ref.file_name());
  }
  PlantedImage img;
  img.width = j.at("width").get<int>();
  img.height = j.at("height").get<int>();
  img.prompt = j.at("prompt").get<std::string>();
  img.alignment = j.at("alignment").get<double>();
  for (const auto& f : j.at("faces")) {
    const auto& b = f.at("box");
    img.faces.push_back({FaceBox{b[0].get<int>(), b[1].get<int>(),
                                 b[2].get<int>(), b[3].get<int>()},
                         f.at("categories").get<std::vector<std::string>>()});
  }
  return img;
}

Embedding SimWorld::image_embedding(const ImageRegion& region) const {
  const PlantedImage img = read_image(region.image);
  const PlantedFace* face = nullptr;
  if (!region.crop) {
    if (!img.faces.empty()) face = &img.faces.front();
  } else {
    const FaceBox& c = *region.crop;
    const double ccx = c.x + c.w / 2.0;
    const double ccy = c.y + c.h / 2.0;
    double best = 0.0;
    for (const auto& f : img.faces) {
      const double fx = f.box.x + f.box.w / 2.0;
      const double fy = f.box.y + f.box.h / 2.0;
      if (fx < c.x || fx > c.x + c.w || fy < c.y || fy > c.y + c.h) continue;
      const double d = (fx - ccx) * (fx - ccx) + (fy - ccy) * (fy - ccy);
      if (face == nullptr || d < best) {
        face = &f;
        best = d;
      }
    }
  }

  std::vector<double> v(dim(), 0.0);
  const auto content = content_vector(img.prompt);
  for (std::size_t i = 0; i < content_dim_; ++i) {
    v[blocks_ + i] = img.alignment * content[i];
  }
  if (face != nullptr) {
    const double a = static_cast<double>(schema_.attributes.size());
    const double beta = std::sqrt((1.0 - img.alignment * img.alignment) / a);
    for (std::size_t i = 0; i < schema_.attributes.size(); ++i) {
      const int c = schema_.attributes[i].index_of(face->categories.at(i));
      if (c < 0) {
        throw Error(ErrorCode::kInvalidArgument, "planted category not in schema",
                    region.image.file_name());
      }
      v[block_of(i, static_cast<std::size_t>(c))] = beta;
    }
  }
  if (profile_.noise > 0.0) {
    std::string key = region.image.id;
    if (region.crop) {
      const FaceBox& c = *region.crop;
      key += "/" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
             std::to_string(c.w) + "," + std::to_string(c.h);
    }
    auto rng = seeded(profile_.seed, "noise/" + key);
    std::vector<double> n(dim());
    double sq = 0.0;
    for (double& x : n) {
      x = gaussian(rng);
      sq += x * x;
    }
    const double scale = profile_.noise / std::sqrt(sq);
    for (std::size_t i = 0; i < n.size(); ++i) v[i] += scale * n[i];
  }
  return Embedding::normalized(std::move(v));
}

std::vector<ImageRef> SimWorld::generate(const GenerationRequest& request) const {
  if (request.count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image count must be positive");
  }
  const std::string text = request.context + "\n" + request.prompt;
  const std::string stream = sha256_hex(request.context + '\x1f' + request.prompt);

  std::vector<std::vector<double>> dists;
  int drifting = 0;
  for (std::size_t a = 0; a < schema_.attributes.size(); ++a) {
    dists.push_back(effective_distribution(a, text));
    if (keyword_hits(a, text) > 0) ++drifting;
  }
  const double alignment =
      profile_.alignment * (1.0 - profile_.alignment_drift * drifting);

  const auto faces_per_image = static_cast<std::size_t>(profile_.faces_per_image);
  const std::size_t slots = static_cast<std::size_t>(request.count) * faces_per_image;
  std::vector<std::vector<std::size_t>> draws;
  for (std::size_t a = 0; a < schema_.attributes.size(); ++a) {
    auto rng = seeded(profile_.seed, "image/" + stream + "/" + schema_.attributes[a].name);
    draws.push_back(systematic_sample(dists[a], slots, rng));
  }

  std::vector<ImageRef> refs;
  refs.reserve(static_cast<std::size_t>(request.count));
  for (int i = 0; i < request.count; ++i) {
    json faces = json::array();
    for (int f = 0; f < profile_.faces_per_image; ++f) {
      const std::size_t slot = static_cast<std::size_t>(i) * faces_per_image +
                               static_cast<std::size_t>(f);
      std::vector<std::string> cats;
      for (std::size_t a = 0; a < schema_.attributes.size(); ++a) {
        cats.push_back(schema_.attributes[a].categories[draws[a][slot]]);
      }
      const FaceBox b = face_slot(f);
      faces.push_back({{"box", {b.x, b.y, b.w, b.h}}, {"categories", cats}});
    }
    json img = {{"format", "fairprompt-sim-image"},
                {"version", kFormatVersion},
                {"width", profile_.image_size},
                {"height", profile_.image_size},
                {"prompt", request.prompt},
                {"context_digest", sha256_hex(request.context)},
                {"index", i},
                {"alignment", alignment},
                {"faces", std::move(faces)}};
    refs.push_back(store_->put(img.dump(), "json"));
  }
  return refs;
}

// Ports ------------------------------------------------------------------------

namespace {

Health sim_health(std::string identity, int dim = 0) {
  return Health{true, std::move(identity), "simulated", dim};
}

std::string sim_identity(const SimWorld& w, std::string_view port) {
  return "sim-" + std::string(port) + "/1 seed=" +
         std::to_string(w.profile().seed);
}

}  // namespace

std::vector<ImageRef> SimGenerator::generate(const GenerationRequest& request) {
  return world_->generate(request);
}
Health SimGenerator::health() { return sim_health(identity()); }
std::string SimGenerator::identity() const {
  return sim_identity(*world_, "generator");
}

std::string SimReasoner::cot_for(std::string_view profession,
                                 int covered) const {
  const std::string p = to_lower(trim(profession));
  std::string out = "Chain of thought for images of a " + p + ":\n";
  out += "1. Keep every image clearly about a " + p + " at work.\n";
  int step = 2;
  int done = 0;
  for (const auto& a : world_->schema().attributes) {
    if (done >= covered) break;
    const auto kws = world_->profile().keywords_for(a.name);
    if (kws.empty()) continue;
    out += std::to_string(step++) + ". Vary " + a.name + ": show ";
    for (std::size_t i = 0; i < kws.size(); ++i) {
      if (i > 0) out += (i + 1 == kws.size()) ? " and " : ", ";
      out += kws[i];
    }
    out += " people in equal measure.\n";
    ++done;
  }
  return out;
}

std::string SimReasoner::chat(std::span<const ChatMessage> messages) {
  const ChatMessage* last_user = nullptr;
  for (const auto& m : messages) {
    if (m.role == "user") last_user = &m;
  }
  if (last_user == nullptr) return {};

  static const std::regex kAdapt(
      R"re(chain of thought for ([^\n]*): "([\s\S]*)"\n)re" +
      std::string(kAdaptMarker) + R"( ([^\n]*)\.)");
  auto find_adaptation = [&](std::smatch& m) -> bool {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
      if (it->role == "user" && std::regex_search(it->content, m, kAdapt)) {
        return true;
      }
    }
    return false;
  };

  if (last_user->content.find(kAdaptMarker) != std::string::npos) {
    std::smatch m;
    if (!std::regex_search(last_user->content, m, kAdapt)) return {};
    const std::string from = to_lower(trim(m[1].str()));
    const std::string to = to_lower(trim(m[3].str()));
    return replace_all(m[2].str(), from, to);
  }

  if (last_user->content.find(kPromptListMarker) != std::string::npos) {
    static const std::regex kCount(R"(generate (\d+) )");
    std::smatch cm;
    if (!std::regex_search(last_user->content, cm, kCount)) return {};
    const int n = std::stoi(cm[1].str());
    std::string profession = "person";
    std::smatch am;
    if (find_adaptation(am)) profession = to_lower(trim(am[3].str()));
    std::string out = "```\n";
    for (int i = 1; i <= n; ++i) {
      out += std::to_string(i) + ". A photo of a " + profession +
             " at work, scene " + std::to_string(i) + " of " +
             std::to_string(n) + "\n";
    }
    out += "```\n";
    return out;
  }

  std::string profession;
  int covered = 0;
  for (const auto& m : messages) {
    if (m.role != "user") continue;
    if (to_lower(m.content).find("think again") != std::string::npos) ++covered;
    if (profession.empty()) {
      auto pos = m.content.find(kProfessionPrefix);
      if (pos != std::string::npos) {
        auto start = pos + kProfessionPrefix.size();
        auto end = m.content.find('\n', start);
        profession = m.content.substr(start, end - start);
      }
    }
  }
  if (profession.empty()) profession = "person";
  return cot_for(profession, covered);
}

Health SimReasoner::health() { return sim_health(identity()); }
std::string SimReasoner::identity() const {
  return sim_identity(*world_, "reasoner");
}

std::vector<Embedding> SimTextEmbedder::do_embed(
    std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(world_->text_embedding(t));
  return out;
}
Health SimTextEmbedder::health() {
  return sim_health(identity(), static_cast<int>(world_->dim()));
}
std::string SimTextEmbedder::identity() const {
  return sim_identity(*world_, "text-embedder");
}

std::vector<Embedding> SimImageEmbedder::do_embed(
    std::span<const ImageRegion> regions) {
  std::vector<Embedding> out;
  out.reserve(regions.size());
  for (const auto& r : regions) out.push_back(world_->image_embedding(r));
  return out;
}
Health SimImageEmbedder::health() {
  return sim_health(identity(), static_cast<int>(world_->dim()));
}
std::string SimImageEmbedder::identity() const {
  return sim_identity(*world_, "image-embedder");
}

Detection SimDetector::detect(const ImageRef& image) {
  const auto img = world_->read_image(image);
  Detection d{img.width, img.height, {}};
  for (auto it = img.faces.rbegin(); it != img.faces.rend(); ++it) {
    d.boxes.push_back(it->box);
  }
  return d;
}
Health SimDetector::health() { return sim_health(identity()); }
std::string SimDetector::identity() const {
  return sim_identity(*world_, "detector");
}

BackendSet make_sim_backends(const AttributeSchema& schema,
                             const BiasProfile& profile,
                             std::shared_ptr<ImageStore> store) {
  if (!store) store = std::make_shared<ImageStore>();
  auto world = std::make_shared<const SimWorld>(schema, profile, store);
  BackendSet set;
  set.store = store;
  set.generator = std::make_shared<SimGenerator>(world);
  set.reasoner = std::make_shared<SimReasoner>(world);
  set.text_embedder = std::make_shared<SimTextEmbedder>(world);
  set.image_embedder = std::make_shared<SimImageEmbedder>(world);
  set.detector = std::make_shared<SimDetector>(world);
  return set;
}

}  // namespace fairprompt
