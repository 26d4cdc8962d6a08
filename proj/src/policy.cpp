#include "openha/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "json.hpp"

namespace openha::policy {

using codecs::AbstractedAction;
using codecs::GroundingAction;
using codecs::GroundingVerb;
using codecs::LatentAction;
using codecs::MotionAction;
using codecs::MotionVerb;
using codecs::SkillAction;
using codecs::SpaceTag;
using json = nlohmann::ordered_json;
using nn::Vec;

std::optional<SpaceTag> prompt_space(const FormatPrompt& p) {
  switch (p.kind) {
    case PromptKind::TextOnly:
      return std::nullopt;
    case PromptKind::HighLevelOnly:
      return p.space;
    case PromptKind::MotionCoA:
      return SpaceTag::Motion;
    case PromptKind::GroundingCoA:
      return SpaceTag::Grounding;
    case PromptKind::SkillCoA:
      return SpaceTag::Skill;
    case PromptKind::LatentCoA:
      return SpaceTag::Latent;
  }
  return std::nullopt;
}

FormatPrompt coa_prompt(SpaceTag space) {
  switch (space) {
    case SpaceTag::Motion:
      return {PromptKind::MotionCoA, space};
    case SpaceTag::Grounding:
      return {PromptKind::GroundingCoA, space};
    case SpaceTag::Skill:
      return {PromptKind::SkillCoA, space};
    case SpaceTag::Latent:
      return {PromptKind::LatentCoA, space};
    default:
      throw UnknownSpace("no CoA prompt for this space");
  }
}

const std::vector<std::string>& grounding_objects() {
  static const std::vector<std::string> kObjects = {
      "none",  "oak_log",        "birch_log", "rock",
      "water", "crafting_table", "furnace",   "sheep",
      "zombie", "spider",        "planks",    "stick"};
  return kObjects;
}

int grounding_object_index(const std::string& name) {
  const auto& objs = grounding_objects();
  if (name.empty()) return 0;
  const auto it = std::find(objs.begin(), objs.end(), name);
  return it == objs.end() ? 0 : static_cast<int>(it - objs.begin());
}

namespace {

// Mixed-radix motion flags: fb(3) lr(3) turn(3) look(3) jump(2) sprint(2)
// sneak(2).
struct MotionFlags {
  int fb = 0, lr = 0, turn = 0, look = 0, jump = 0, sprint = 0, sneak = 0;
};

MotionFlags motion_flags(const MotionAction& m) {
  MotionFlags f;
  for (MotionVerb v : m.verbs) {
    switch (v) {
      case MotionVerb::GoForward:
        f.fb = 1;
        break;
      case MotionVerb::GoBackward:
        f.fb = 2;
        break;
      case MotionVerb::StrafeLeft:
        f.lr = 1;
        break;
      case MotionVerb::StrafeRight:
        f.lr = 2;
        break;
      case MotionVerb::TurnLeft:
        f.turn = 1;
        break;
      case MotionVerb::TurnRight:
        f.turn = 2;
        break;
      case MotionVerb::LookUp:
        f.look = 1;
        break;
      case MotionVerb::LookDown:
        f.look = 2;
        break;
      case MotionVerb::Jump:
        f.jump = 1;
        break;
      case MotionVerb::Sprint:
        f.sprint = 1;
        break;
      case MotionVerb::Sneak:
        f.sneak = 1;
        break;
      case MotionVerb::Stop:
        break;
    }
  }
  return f;
}

}  // namespace

int motion_index(const MotionAction& m) {
  const MotionFlags f = motion_flags(m);
  int idx = f.fb;
  idx = idx * 3 + f.lr;
  idx = idx * 3 + f.turn;
  idx = idx * 3 + f.look;
  idx = idx * 2 + f.jump;
  idx = idx * 2 + f.sprint;
  idx = idx * 2 + f.sneak;
  return idx;
}

MotionAction motion_from_index(int index) {
  MotionFlags f;
  f.sneak = index % 2;
  index /= 2;
  f.sprint = index % 2;
  index /= 2;
  f.jump = index % 2;
  index /= 2;
  f.look = index % 3;
  index /= 3;
  f.turn = index % 3;
  index /= 3;
  f.lr = index % 3;
  index /= 3;
  f.fb = index;
  MotionAction m;
  if (f.fb == 1) m.verbs.push_back(MotionVerb::GoForward);
  if (f.fb == 2) m.verbs.push_back(MotionVerb::GoBackward);
  if (f.lr == 1) m.verbs.push_back(MotionVerb::StrafeLeft);
  if (f.lr == 2) m.verbs.push_back(MotionVerb::StrafeRight);
  if (f.turn == 1) m.verbs.push_back(MotionVerb::TurnLeft);
  if (f.turn == 2) m.verbs.push_back(MotionVerb::TurnRight);
  if (f.look == 1) m.verbs.push_back(MotionVerb::LookUp);
  if (f.look == 2) m.verbs.push_back(MotionVerb::LookDown);
  if (f.jump) m.verbs.push_back(MotionVerb::Jump);
  if (f.sprint) m.verbs.push_back(MotionVerb::Sprint);
  if (f.sneak) m.verbs.push_back(MotionVerb::Sneak);
  if (m.verbs.empty()) m.verbs.push_back(MotionVerb::Stop);
  return m;
}

FeatureConfig FeatureConfig::from_task_suite() {
  FeatureConfig cfg;
  for (const auto& t : minegrid::task_suite()) {
    cfg.instructions.push_back(t.instruction);
  }
  return cfg;
}

namespace {

constexpr int kView = minegrid::kViewSize;
constexpr int kGui = minegrid::kGuiSize;
constexpr int kEntityChannels = 4;  // none, sheep, zombie, spider
constexpr int kCoordHead = kView * kView + 1;  // +1 sentinel

int view_block() {
  return kView * kView * (minegrid::kNumCellKinds + kEntityChannels);
}

int fixed_feature_dim() {
  return view_block()              // terrain + entity one-hots
         + 8 + 3 + 1              // heading, pitch, health
         + 1                      // gui flag
         + kGui * kGui * (minegrid::kNumItems + 1)  // slot item + count
         + 2 * kGui               // cursor col/row one-hots
         + minegrid::kNumItems;   // selected item
}

}  // namespace

int FeatureConfig::dim() const {
  return fixed_feature_dim() + static_cast<int>(instructions.size()) +
         kNumPromptKinds;
}

Vec featurize(const FeatureConfig& cfg, const minegrid::Observation& obs,
              const std::string& instruction, const FormatPrompt& prompt) {
  Vec f(cfg.dim(), 0.0);
  int base = 0;
  const int cell_ch = minegrid::kNumCellKinds + kEntityChannels;
  for (int i = 0; i < kView * kView; ++i) {
    const auto& c = obs.view[i];
    f[base + i * cell_ch + c.terrain] = 1.0;
    f[base + i * cell_ch + minegrid::kNumCellKinds + c.entity] = 1.0;
  }
  base += view_block();
  f[base + (obs.heading / 45) % 8] = 1.0;
  base += 8;
  f[base + obs.pitch / 45 + 1] = 1.0;
  base += 3;
  f[base] = obs.health / 20.0;
  base += 1;
  f[base] = obs.gui_mode ? 1.0 : 0.0;
  base += 1;
  for (int i = 0; i < kGui * kGui; ++i) {
    const int slot = base + i * (minegrid::kNumItems + 1);
    if (obs.gui_mode && i < static_cast<int>(obs.gui.size())) {
      f[slot + static_cast<int>(obs.gui[i].item)] = 1.0;
      f[slot + minegrid::kNumItems] = obs.gui[i].count / 4.0;
    }
  }
  base += kGui * kGui * (minegrid::kNumItems + 1);
  if (obs.gui_mode && obs.cursor_col >= 0) {
    f[base + obs.cursor_col] = 1.0;
    f[base + kGui + obs.cursor_row] = 1.0;
  }
  base += 2 * kGui;
  if (auto item = minegrid::item_from_name(obs.selected_item)) {
    f[base + static_cast<int>(*item)] = 1.0;
  }
  base += minegrid::kNumItems;
  for (std::size_t i = 0; i < cfg.instructions.size(); ++i) {
    if (cfg.instructions[i] == instruction) {
      f[base + i] = 1.0;
      break;
    }
  }
  base += static_cast<int>(cfg.instructions.size());
  f[base + static_cast<int>(prompt.kind)] = 1.0;
  return f;
}

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Flat:
      return "flat";
    case ModelKind::HighLevel:
      return "high_level";
    case ModelKind::LowLevel:
      return "low_level";
    case ModelKind::UnifiedCoA:
      return "unified_coa";
  }
  return "?";
}

int embed_dim(const PolicyConfig& cfg) {
  return 6 + codecs::kNumMotionVerbs + codecs::kNumGroundingVerbs +
         static_cast<int>(grounding_objects().size()) + 3 +
         static_cast<int>(codecs::skill_taxonomy().size()) +
         cfg.codebook_size;
}

Vec embed_abstracted(const PolicyConfig& cfg, const AbstractedAction& a) {
  Vec e(embed_dim(cfg), 0.0);
  const SpaceTag tag = codecs::tag_of(a);
  e[static_cast<int>(tag)] = 1.0;
  int base = 6;
  if (const auto* m = std::get_if<MotionAction>(&a)) {
    for (MotionVerb v : m->verbs) e[base + static_cast<int>(v)] = 1.0;
  }
  base += codecs::kNumMotionVerbs;
  const int obj_count = static_cast<int>(grounding_objects().size());
  if (const auto* g = std::get_if<GroundingAction>(&a)) {
    e[base + static_cast<int>(g->verb)] = 1.0;
    e[base + codecs::kNumGroundingVerbs + grounding_object_index(g->object)] =
        1.0;
    const int coord = base + codecs::kNumGroundingVerbs + obj_count;
    if (g->is_sentinel()) {
      e[coord + 2] = 1.0;
    } else {
      e[coord] = static_cast<double>(g->col) / kView;
      e[coord + 1] = static_cast<double>(g->row) / kView;
    }
  }
  base += codecs::kNumGroundingVerbs + obj_count + 3;
  const auto& taxonomy = codecs::skill_taxonomy();
  if (const auto* s = std::get_if<SkillAction>(&a)) {
    const auto it = std::find(taxonomy.begin(), taxonomy.end(), s->text);
    if (it == taxonomy.end()) {
      throw UnsupportedAbstraction("skill outside the taxonomy: " + s->text);
    }
    e[base + (it - taxonomy.begin())] = 1.0;
  }
  base += static_cast<int>(taxonomy.size());
  if (const auto* l = std::get_if<LatentAction>(&a)) {
    if (l->code < 0 || l->code >= cfg.codebook_size) {
      throw UnsupportedAbstraction("latent code outside the codebook");
    }
    e[base + l->code] = 1.0;
  }
  if (std::holds_alternative<codecs::RawAction>(a) ||
      std::holds_alternative<codecs::TextAction>(a)) {
    throw UnsupportedAbstraction("raw/text values have no conditioning slot");
  }
  return e;
}

ActionNet::ActionNet(const PolicyConfig& cfg)
    : cfg_(cfg),
      trunk_({cfg.features.dim(), cfg.hidden}),
      motion_({cfg.hidden, kMotionComboCount}),
      g_verb_({cfg.hidden, codecs::kNumGroundingVerbs}),
      g_obj_({cfg.hidden, static_cast<int>(grounding_objects().size())}),
      g_coord_({cfg.hidden, kCoordHead}),
      skill_({cfg.hidden, static_cast<int>(codecs::skill_taxonomy().size())}),
      latent_({cfg.hidden, cfg.codebook_size}),
      low_({cfg.hidden + embed_dim(cfg), cfg.hidden, vq::kStepFeatureDim}) {}

void ActionNet::init(Rng& rng) {
  trunk_.init(rng);
  motion_.init(rng);
  g_verb_.init(rng);
  g_obj_.init(rng);
  g_coord_.init(rng);
  skill_.init(rng);
  latent_.init(rng);
  low_.init(rng);
}

std::vector<Vec*> ActionNet::param_blocks() {
  return {&trunk_.params(),  &motion_.params(), &g_verb_.params(),
          &g_obj_.params(),  &g_coord_.params(), &skill_.params(),
          &latent_.params(), &low_.params()};
}

std::vector<const Vec*> ActionNet::param_blocks() const {
  return {&trunk_.params(),  &motion_.params(), &g_verb_.params(),
          &g_obj_.params(),  &g_coord_.params(), &skill_.params(),
          &latent_.params(), &low_.params()};
}

ActionNet::Grads::Grads(const ActionNet& net) {
  for (const Vec* p : net.param_blocks()) blocks.emplace_back(p->size(), 0.0);
}

void ActionNet::Grads::zero() {
  for (Vec& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

void ActionNet::Grads::scale(double s) {
  for (Vec& b : blocks) {
    for (double& v : b) v *= s;
  }
}

void ActionNet::Grads::add(const Grads& other) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks[i].size(); ++j) {
      blocks[i][j] += other.blocks[i][j];
    }
  }
}

Vec ActionNet::trunk_features(const Vec& feat) const {
  Vec h = trunk_.forward(feat);
  for (double& v : h) v = std::tanh(v);
  return h;
}

std::vector<Vec> ActionNet::high_logits(const Vec& h, SpaceTag space) const {
  switch (space) {
    case SpaceTag::Motion:
      return {motion_.forward(h)};
    case SpaceTag::Grounding:
      return {g_verb_.forward(h), g_obj_.forward(h), g_coord_.forward(h)};
    case SpaceTag::Skill:
      return {skill_.forward(h)};
    case SpaceTag::Latent:
      return {latent_.forward(h)};
    default:
      throw UnknownSpace("no abstracted head for this space");
  }
}

Vec ActionNet::low_logits(const Vec& h,
                          const std::optional<AbstractedAction>& A) const {
  Vec in = h;
  Vec emb = A ? embed_abstracted(cfg_, *A) : Vec(embed_dim(cfg_), 0.0);
  in.insert(in.end(), emb.begin(), emb.end());
  return low_.forward(in);
}

namespace {

struct HighTargets {
  // Parallel head logits and target indices; 1 entry (3 for grounding).
  std::vector<int> targets;
};

int coord_index(const GroundingAction& g) {
  if (g.is_sentinel()) return kView * kView;
  return g.row * kView + g.col;
}

std::vector<int> high_targets(const AbstractedAction& A) {
  if (const auto* m = std::get_if<MotionAction>(&A)) {
    return {motion_index(*m)};
  }
  if (const auto* g = std::get_if<GroundingAction>(&A)) {
    return {static_cast<int>(g->verb), grounding_object_index(g->object),
            coord_index(*g)};
  }
  if (const auto* s = std::get_if<SkillAction>(&A)) {
    const auto& tax = codecs::skill_taxonomy();
    const auto it = std::find(tax.begin(), tax.end(), s->text);
    if (it == tax.end()) {
      throw UnsupportedAbstraction("skill outside the taxonomy: " + s->text);
    }
    return {static_cast<int>(it - tax.begin())};
  }
  if (const auto* l = std::get_if<LatentAction>(&A)) {
    return {l->code};
  }
  throw UnsupportedAbstraction("no high-level head for raw/text values");
}

constexpr int kGroupBase[4] = {
    codecs::RawCodecConfig::kMovementBase, codecs::RawCodecConfig::kPitchBase,
    codecs::RawCodecConfig::kYawBase, codecs::RawCodecConfig::kInteractionBase};
constexpr int kGroupSize[4] = {
    codecs::RawCodecConfig::kMovementSize, codecs::RawCodecConfig::kPitchSize,
    codecs::RawCodecConfig::kYawSize, codecs::RawCodecConfig::kInteractionSize};

std::array<int, 4> group_targets(const EnvAction& a) {
  const vq::GroupIndices g = vq::group_indices(a);
  return {g.movement, g.pitch, g.yaw, g.interaction};
}

double grouped_ce(const Vec& logits, const std::array<int, 4>& targets,
                  Vec* dlogits) {
  double loss = 0.0;
  if (dlogits) dlogits->assign(logits.size(), 0.0);
  for (int g = 0; g < 4; ++g) {
    Vec gl(logits.begin() + kGroupBase[g],
           logits.begin() + kGroupBase[g] + kGroupSize[g]);
    Vec dgl(kGroupSize[g], 0.0);
    loss += nn::ce_from_logits(gl, targets[g], dlogits ? &dgl : nullptr);
    if (dlogits) {
      for (int i = 0; i < kGroupSize[g]; ++i) {
        (*dlogits)[kGroupBase[g] + i] += dgl[i];
      }
    }
  }
  return loss;
}

}  // namespace

double ActionNet::high_logprob(const Vec& h, const AbstractedAction& A) const {
  const SpaceTag tag = codecs::tag_of(A);
  const std::vector<Vec> logits = high_logits(h, tag);
  const std::vector<int> targets = high_targets(A);
  double lp = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    lp += logits[i][targets[i]] - nn::log_sum_exp(logits[i]);
  }
  return lp;
}

double ActionNet::low_logprob(const Vec& h,
                              const std::optional<AbstractedAction>& A,
                              const EnvAction& a) const {
  const Vec logits = low_logits(h, A);
  const auto targets = group_targets(a);
  double lp = 0.0;
  for (int g = 0; g < 4; ++g) {
    Vec gl(logits.begin() + kGroupBase[g],
           logits.begin() + kGroupBase[g] + kGroupSize[g]);
    lp += gl[targets[g]] - nn::log_sum_exp(gl);
  }
  return lp;
}

ActionNet::LossBreakdown ActionNet::example_loss(
    const Vec& feat, const std::optional<AbstractedAction>& A,
    const std::optional<EnvAction>& a, Grads* grads) const {
  const bool want_high =
      A && (cfg_.kind == ModelKind::HighLevel || cfg_.kind == ModelKind::UnifiedCoA);
  const bool want_low = a && cfg_.kind != ModelKind::HighLevel;
  const bool condition_low = cfg_.kind != ModelKind::Flat;

  nn::Mlp::Cache trunk_cache;
  Vec h = trunk_.forward(feat, grads ? &trunk_cache : nullptr);
  for (double& v : h) v = std::tanh(v);
  Vec dh(h.size(), 0.0);

  LossBreakdown out;
  if (want_high) {
    const std::vector<int> targets = high_targets(*A);
    const SpaceTag tag = codecs::tag_of(*A);
    const nn::Mlp* heads3[3] = {nullptr, nullptr, nullptr};
    switch (tag) {
      case SpaceTag::Motion:
        heads3[0] = &motion_;
        break;
      case SpaceTag::Grounding:
        heads3[0] = &g_verb_;
        heads3[1] = &g_obj_;
        heads3[2] = &g_coord_;
        break;
      case SpaceTag::Skill:
        heads3[0] = &skill_;
        break;
      case SpaceTag::Latent:
        heads3[0] = &latent_;
        break;
      default:
        throw UnsupportedAbstraction("no high-level head for raw/text values");
    }
    // Block indices of the heads in param_blocks() order.
    const int block_of[3] = {
        tag == SpaceTag::Motion      ? 1
        : tag == SpaceTag::Grounding ? 2
        : tag == SpaceTag::Skill     ? 5
                                     : 6,
        3, 4};
    for (int i = 0; i < 3 && heads3[i]; ++i) {
      nn::Mlp::Cache cache;
      const Vec logits = heads3[i]->forward(h, grads ? &cache : nullptr);
      Vec dlogits(logits.size(), 0.0);
      out.high += nn::ce_from_logits(logits, targets[i],
                                     grads ? &dlogits : nullptr);
      if (grads) {
        const Vec dx =
            heads3[i]->backward(cache, dlogits, grads->blocks[block_of[i]]);
        for (std::size_t j = 0; j < dh.size(); ++j) dh[j] += dx[j];
      }
    }
  }
  if (want_low) {
    Vec in = h;
    Vec emb = (condition_low && A) ? embed_abstracted(cfg_, *A)
                                   : Vec(embed_dim(cfg_), 0.0);
    in.insert(in.end(), emb.begin(), emb.end());
    nn::Mlp::Cache cache;
    const Vec logits = low_.forward(in, grads ? &cache : nullptr);
    Vec dlogits;
    out.low += grouped_ce(logits, group_targets(*a), grads ? &dlogits : nullptr);
    if (grads) {
      const Vec dx = low_.backward(cache, dlogits, grads->blocks[7]);
      for (std::size_t j = 0; j < dh.size(); ++j) dh[j] += dx[j];
    }
  }
  if (grads) {
    for (std::size_t j = 0; j < dh.size(); ++j) dh[j] *= 1.0 - h[j] * h[j];
    trunk_.backward(trunk_cache, dh, grads->blocks[0]);
  }
  out.total = out.high + out.low;
  if (!std::isfinite(out.total)) throw NumericalOverflow("loss diverged");
  return out;
}

AbstractedAction sample_abstracted(const ActionNet& model, const Vec& feat,
                                   SpaceTag space, Rng& rng, bool greedy) {
  const Vec h = model.trunk_features(feat);
  const std::vector<Vec> logits = model.high_logits(h, space);
  std::vector<int> picks;
  for (const Vec& l : logits) {
    if (greedy) {
      picks.push_back(nn::argmax(l));
    } else {
      Vec probs;
      nn::softmax(l, probs);
      picks.push_back(nn::sample_categorical(probs, rng));
    }
  }
  switch (space) {
    case SpaceTag::Motion:
      return motion_from_index(picks[0]);
    case SpaceTag::Grounding: {
      GroundingAction g;
      g.verb = static_cast<GroundingVerb>(picks[0]);
      if (g.verb == GroundingVerb::Explore) {
        return g;  // sentinel form, always serializable
      }
      g.object = grounding_objects()[picks[1]];
      if (picks[2] == kView * kView) {
        g.col = kView / 2;  // head picked the sentinel cell; recenter
        g.row = kView / 2;
      } else {
        g.col = picks[2] % kView;
        g.row = picks[2] / kView;
      }
      return g;
    }
    case SpaceTag::Skill:
      return SkillAction{codecs::skill_taxonomy()[picks[0]]};
    case SpaceTag::Latent:
      return LatentAction{picks[0]};
    default:
      throw UnknownSpace("cannot sample raw/text from an abstracted head");
  }
}

EnvAction decode_low(const ActionNet& model, const Vec& feat,
                     const std::optional<AbstractedAction>& A, Rng& rng,
                     bool greedy) {
  const Vec h = model.trunk_features(feat);
  const Vec logits = model.low_logits(h, A);
  vq::GroupIndices g;
  int* slots[4] = {&g.movement, &g.pitch, &g.yaw, &g.interaction};
  for (int i = 0; i < 4; ++i) {
    Vec gl(logits.begin() + kGroupBase[i],
           logits.begin() + kGroupBase[i] + kGroupSize[i]);
    if (greedy) {
      *slots[i] = nn::argmax(gl);
    } else {
      Vec probs;
      nn::softmax(gl, probs);
      *slots[i] = nn::sample_categorical(probs, rng);
    }
  }
  return vq::action_from_groups(g);
}

CoAResult coa_step(const ActionNet& model, const Vec& feat, SpaceTag space,
                   Rng& rng, bool greedy) {
  const Vec h = model.trunk_features(feat);
  CoAResult r;
  r.A = sample_abstracted(model, feat, space, rng, greedy);
  r.log_high = model.high_logprob(h, r.A);
  r.a = decode_low(model, feat, r.A, rng, greedy);
  r.log_low = model.low_logprob(h, r.A, r.a);
  r.log_joint = r.log_high + r.log_low;
  return r;
}

EnvAction LatentExecutor::step(int code) {
  if (code != code_ || cursor_ >= static_cast<int>(window_.actions.size())) {
    window_ = vq::decode_latent(*model_, code);
    code_ = code;
    cursor_ = 0;
  }
  return window_.actions[cursor_++];
}

namespace {

struct PreparedRecord {
  const labeler::DatasetRecord* rec;
  FormatPrompt prompt;
};

FormatPrompt record_prompt(const labeler::DatasetRecord& r) {
  if (r.A && r.a) return coa_prompt(r.space);
  if (r.A) return {PromptKind::HighLevelOnly, r.space};
  return {PromptKind::TextOnly, r.space};
}

void check_kinds(const ActionNet& model,
                 const std::vector<labeler::Dataset>& datasets, int stage) {
  const ModelKind k = model.config().kind;
  for (const auto& d : datasets) {
    const labeler::DatasetKind dk = d.kind;
    bool ok = false;
    switch (k) {
      case ModelKind::Flat:
        ok = dk == labeler::DatasetKind::Da;
        break;
      case ModelKind::HighLevel:
        ok = dk == labeler::DatasetKind::DA;
        break;
      case ModelKind::LowLevel:
        ok = dk == labeler::DatasetKind::DCoA;
        break;
      case ModelKind::UnifiedCoA:
        ok = stage == 1 ? (dk == labeler::DatasetKind::DA ||
                           dk == labeler::DatasetKind::Da)
                        : dk == labeler::DatasetKind::DCoA;
        break;
    }
    if (!ok) {
      throw DatasetKindMismatch(
          std::string(model_kind_name(k)) + " model cannot train on " +
          std::string(labeler::dataset_kind_name(dk)) + " at stage " +
          std::to_string(stage));
    }
  }
}

TrainResult train_impl(ActionNet& model,
                       const std::vector<labeler::Dataset>& datasets,
                       const TrainConfig& cfg) {
  check_kinds(model, datasets, cfg.stage);
  std::vector<PreparedRecord> records;
  for (const auto& d : datasets) {
    for (const auto& r : d.records) {
      records.push_back({&r, record_prompt(r)});
    }
  }
  if (records.empty()) throw DatasetKindMismatch("no records to train on");

  const double lr =
      cfg.stage == 2 ? cfg.stage2_lr.value_or(cfg.lr / 2.0) : cfg.lr;
  std::vector<nn::Adam> opts(model.param_blocks().size());
  for (auto& o : opts) o.lr = lr;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  ActionNet::Grads batch_grads(model);
  ActionNet::Grads one(model);
  const auto& fcfg = model.config().features;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_below(i)]);
    }
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      batch_grads.zero();
      for (std::size_t i = start; i < stop; ++i) {
        const PreparedRecord& pr = records[order[i]];
        const Vec feat = featurize(fcfg, pr.rec->obs, pr.rec->instruction,
                                   pr.prompt);
        one.zero();
        sum += model.example_loss(feat, pr.rec->A, pr.rec->a, &one).total;
        batch_grads.add(one);
      }
      batch_grads.scale(1.0 / static_cast<double>(stop - start));
      auto blocks = model.param_blocks();
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        opts[b].step(*blocks[b], batch_grads.blocks[b]);
      }
    }
    result.epoch_loss.push_back(sum / static_cast<double>(records.size()));
  }

  std::map<std::string, double> space_sum;
  std::map<std::string, long> space_n;
  for (const auto& pr : records) {
    const Vec feat =
        featurize(fcfg, pr.rec->obs, pr.rec->instruction, pr.prompt);
    const double l = model.example_loss(feat, pr.rec->A, pr.rec->a).total;
    const std::string key(codecs::space_name(pr.rec->space));
    space_sum[key] += l;
    space_n[key]++;
  }
  for (const auto& [key, s] : space_sum) {
    result.final_loss_per_space[key] = s / static_cast<double>(space_n[key]);
  }
  return result;
}

}  // namespace

TrainResult train_bc(ActionNet& model,
                     const std::vector<labeler::Dataset>& datasets,
                     const TrainConfig& cfg) {
  return train_impl(model, datasets, cfg);
}

TrainResult train_all_in_one(ActionNet& model,
                             const std::vector<labeler::Dataset>& datasets,
                             const TrainConfig& cfg) {
  std::set<SpaceTag> spaces;
  for (const auto& d : datasets) {
    for (const auto& r : d.records) {
      if (r.A) spaces.insert(r.space);
    }
  }
  if (spaces.size() < 2) {
    throw DatasetKindMismatch(
        "all-in-one training needs at least two abstracted spaces");
  }
  return train_impl(model, datasets, cfg);
}

std::string save_policy(const ActionNet& model) {
  json j;
  j["version"] = 1;
  json cfg;
  cfg["kind"] = static_cast<int>(model.cfg_.kind);
  cfg["hidden"] = model.cfg_.hidden;
  cfg["codebook_size"] = model.cfg_.codebook_size;
  cfg["instructions"] = model.cfg_.features.instructions;
  j["config"] = std::move(cfg);
  json shapes = json::array();
  json blocks = json::array();
  for (const Vec* p : model.param_blocks()) {
    shapes.push_back(p->size());
    json arr = json::array();
    for (double v : *p) arr.push_back(v);
    blocks.push_back(std::move(arr));
  }
  j["shapes"] = std::move(shapes);
  j["blocks"] = std::move(blocks);
  return j.dump();
}

ActionNet load_policy(const std::string& text) {
  const json j = json::parse(text);
  const json& c = j.at("config");
  PolicyConfig cfg;
  cfg.kind = static_cast<ModelKind>(c.at("kind").get<int>());
  cfg.hidden = c.at("hidden").get<int>();
  cfg.codebook_size = c.at("codebook_size").get<int>();
  cfg.features.instructions =
      c.at("instructions").get<std::vector<std::string>>();
  ActionNet model(cfg);
  auto blocks = model.param_blocks();
  const json& shapes = j.at("shapes");
  const json& data = j.at("blocks");
  if (shapes.size() != blocks.size() || data.size() != blocks.size()) {
    throw ShapeMismatch("checkpoint block count mismatch");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (shapes[b].get<std::size_t>() != blocks[b]->size() ||
        data[b].size() != blocks[b]->size()) {
      throw ShapeMismatch("checkpoint block size mismatch");
    }
    for (std::size_t i = 0; i < blocks[b]->size(); ++i) {
      (*blocks[b])[i] = data[b][i].get<double>();
    }
  }
  return model;
}

}  // namespace openha::policy
