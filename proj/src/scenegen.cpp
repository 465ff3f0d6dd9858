#include "uri/scenegen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "uri/error.hpp"
#include "uri/parallel.hpp"
#include "uri/random.hpp"

namespace uri {

namespace {

constexpr std::uint64_t kSceneStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

bool mentions(const CoreRule& rule, std::string_view attribute) {
  for (const auto& d : rule.lhs()) {
    for (const auto& a : d.atoms()) {
      if (a.attribute == attribute) return true;
    }
  }
  return false;
}

// Rule i with every earlier-derived attribute substituted away.
std::vector<CoreRule> expanded_rules(const std::vector<CoreRule>& rules) {
  std::vector<CoreRule> out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    CoreRule r = rules[i];
    for (std::size_t j = i; j-- > 0;) {
      if (mentions(r, rules[j].rhs_attribute())) r = compose_rules(r, out[j]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EntityId> pick(Rng& rng, const std::vector<EntityId>& pool, std::size_t n) {
  std::vector<EntityId> v = pool;
  for (std::size_t i = 0; i < n; ++i) std::swap(v[i], v[i + rng.below(v.size() - i)]);
  v.resize(n);
  return v;
}

bool has_attribute(const Scene& s, std::string_view attr) { return !s.atoms_of(attr).empty(); }

}  // namespace

double DistributionSpec::density(std::string_view attribute) const {
  const auto it = densities.find(attribute);
  return it == densities.end() ? default_density : it->second;
}

std::vector<std::string> DistributionSpec::derived_attributes() const {
  std::vector<std::string> out;
  for (const auto& r : rules) out.push_back(r.rhs_attribute());
  return out;
}

void DistributionSpec::validate() const {
  if (!vocab) throw ConfigError("spec has no vocabulary");
  if (blocks == 0) throw ConfigError("spec N must be >= 1");
  if (max_offset < 1) throw ConfigError("spec M must be >= 1");
  if (entities_min > entities_max) throw ConfigError("spec entities range is empty");
  if (entities_max > blocks) {
    throw ConfigError("spec asks for up to " + std::to_string(entities_max) +
                      " entities in " + std::to_string(blocks) + " blocks");
  }
  if (entities_max > vocab->entity_names().size()) {
    throw ConfigError("spec asks for more entities than the vocabulary names");
  }
  if (entities_min < blocks && vocab->words().empty()) {
    throw ConfigError("spec leaves word blocks but the vocabulary declares no words");
  }
  auto unit = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("spec ") + what + " outside [0, 1]");
  };
  unit(plant_rate, "plant_rate");
  unit(rho, "rho");
  unit(eta, "eta");
  unit(default_density, "density");
  for (const auto& [name, p] : densities) {
    if (!vocab->attribute(name)) throw ConfigError("spec density for unknown attribute '" + name + "'");
    unit(p, "density");
  }
  std::set<std::string> derived;
  for (const auto& r : rules) {
    r.validate(*vocab);
    if (!derived.insert(r.rhs_attribute()).second) {
      throw ConfigError("attribute '" + r.rhs_attribute() + "' is derived by two planted rules");
    }
  }
}

VocabularyPtr default_vocabulary() {
  static const VocabularyPtr vocab = std::make_shared<const AugmentedVocabulary>(
      AugmentedVocabulary::define({"Ann", "Bill", "Bob", "Eve", "Joan", "Joe", "Sue", "Tom"},
                                  {{"DoesBadTo", 2}, {"Insulted", 2}, {"Likes", 2},
                                   {"Revenges", 2}, {"Tall", 1}},
                                  {"and", "later", "the", "then"}));
  return vocab;
}

CoreRule revenge_rule() {
  return parse_rule("revenge: Revenges(z,x) ~= exists y. Insulted(x,y) & Likes(z,y)");
}

DistributionSpec default_spec() {
  DistributionSpec spec;
  spec.vocab = default_vocabulary();
  spec.rules = {revenge_rule()};
  return spec;
}

Scene sample_scene(const DistributionSpec& spec, std::uint64_t draw_index) {
  Rng rng(spec.seed, draw_index, kSceneStream);
  const std::size_t n = spec.blocks;
  const std::size_t window = std::min<std::size_t>(n, static_cast<std::size_t>(spec.max_offset) + 1);
  const std::size_t entity_count =
      spec.entities_min + rng.below(spec.entities_max - spec.entities_min + 1);
  const std::size_t start = rng.below(n - window + 1);

  // Entities fill the focus window first; the rest go anywhere outside it.
  const std::size_t inside = std::min(entity_count, window);
  std::vector<std::size_t> outside_blocks;
  for (std::size_t b = 0; b < n; ++b) {
    if (b < start || b >= start + window) outside_blocks.push_back(b);
  }
  rng.shuffle(outside_blocks);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < window; ++i) positions.push_back(start + i);
  rng.shuffle(positions);
  positions.resize(inside);
  for (std::size_t i = 0; i < entity_count - inside; ++i) positions.push_back(outside_blocks[i]);

  std::vector<std::string> names(spec.vocab->entity_names().begin(),
                                 spec.vocab->entity_names().end());
  rng.shuffle(names);

  Scene scene(n);
  std::vector<EntityId> focus;
  for (std::size_t i = 0; i < entity_count; ++i) {
    const EntityId id = scene.add_entity(names[i], positions[i]);
    if (i < inside) focus.push_back(id);
  }
  const auto words = spec.vocab->words();
  for (std::size_t b = 0; b < n; ++b) {
    if (!scene.entity_at(b)) scene.set_word(b, words[rng.below(words.size())]);
  }

  const auto derived = spec.derived_attributes();
  auto is_derived = [&](std::string_view a) {
    return std::find(derived.begin(), derived.end(), a) != derived.end();
  };

  // Planted lhs instances.
  for (const auto& rule : expanded_rules(spec.rules)) {
    if (!rng.bernoulli(spec.plant_rate)) continue;
    const auto& d = rule.lhs()[rng.below(rule.lhs().size())];
    const auto vars = d.variables();
    if (vars.size() > focus.size()) continue;
    bool clash = false;
    for (const auto& a : d.atoms()) {
      if (spec.rho == 0.0 && has_attribute(scene, a.attribute)) clash = true;
    }
    if (clash) continue;
    const auto chosen = pick(rng, focus, vars.size());
    for (const auto& a : d.atoms()) {
      std::vector<EntityId> args;
      for (const auto& v : a.vars) {
        args.push_back(chosen[static_cast<std::size_t>(
            std::find(vars.begin(), vars.end(), v) - vars.begin())]);
      }
      scene.add_atom(a.attribute, std::move(args));
    }
  }

  // Background atoms of base attributes.
  for (const auto& attr : spec.vocab->attributes()) {
    if (is_derived(attr.name)) continue;
    const auto arity = static_cast<std::size_t>(attr.arity);
    if (arity > focus.size()) continue;
    if (!has_attribute(scene, attr.name) && rng.bernoulli(spec.density(attr.name))) {
      scene.add_atom(attr.name, pick(rng, focus, arity));
    }
    if (has_attribute(scene, attr.name) && spec.rho > 0.0 && rng.bernoulli(spec.rho)) {
      scene.add_atom(attr.name, pick(rng, focus, arity));
    }
  }

  for (const auto& rule : spec.rules) {
    for (auto& atom : apply_rule(scene, rule)) scene.add_atom(std::move(atom));
  }
  return scene;
}

std::vector<Scene> sample_scenes(const DistributionSpec& spec, std::size_t n,
                                 std::uint64_t first_index, std::size_t threads) {
  spec.validate();
  std::vector<Scene> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = sample_scene(spec, first_index + i); });
  return out;
}

std::vector<std::string> hidden_attributes(const DistributionSpec& spec,
                                           std::string_view attribute) {
  for (std::size_t i = 0; i < spec.rules.size(); ++i) {
    if (spec.rules[i].rhs_attribute() != attribute) continue;
    std::vector<std::string> out;
    for (std::size_t j = i; j < spec.rules.size(); ++j) out.push_back(spec.rules[j].rhs_attribute());
    return out;
  }
  return {std::string(attribute)};
}

std::vector<bool> role_labels(const Scene& scene, std::string_view attribute, int role) {
  std::vector<bool> out(scene.blocks(), false);
  for (const auto& a : scene.atoms_of(attribute)) {
    out[scene.entity(a.args.at(static_cast<std::size_t>(role - 1))).position] = true;
  }
  return out;
}

LabeledDataset generate_dataset(const DistributionSpec& spec, std::span<const TokenId> targets,
                                std::size_t n, std::uint64_t first_index, std::size_t threads) {
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  if (targets.empty()) throw ConfigError("dataset needs at least one target token");
  spec.validate();
  const auto& vocab = *spec.vocab;

  struct TargetInfo {
    std::string attribute;
    int role;
  };
  std::vector<TargetInfo> info;
  std::set<std::string> hidden;
  for (TokenId t : targets) {
    const auto role = vocab.role_of(t);
    if (!role) throw ConfigError("target '" + vocab.name(t) + "' is not a role token");
    const auto& attr = vocab.attributes()[role->attribute];
    info.push_back({attr.name, role->role});
    for (auto& h : hidden_attributes(spec, attr.name)) hidden.insert(std::move(h));
  }

  const auto scenes = sample_scenes(spec, n, first_index, threads);
  LabeledDataset ds;
  ds.targets.assign(targets.begin(), targets.end());
  ds.labels.assign(targets.size(), {});
  std::vector<std::shared_ptr<const BlockPresenceFeatures>> grids(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Scene visible = scenes[i];
    for (const auto& a : hidden) visible.remove_attribute(a);
    grids[i] = std::make_shared<const BlockPresenceFeatures>(scene_presence(visible, vocab));
  });
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t draw = first_index + i;
    Rng noise(spec.seed, draw, kNoiseStream);
    std::vector<std::vector<bool>> scene_labels;
    for (const auto& t : info) scene_labels.push_back(role_labels(scenes[i], t.attribute, t.role));
    for (std::size_t b = 0; b < spec.blocks; ++b) {
      ds.instances.push_back({grids[i], b, {draw, spec.seed}});
      for (std::size_t t = 0; t < info.size(); ++t) {
        bool label = scene_labels[t][b];
        if (spec.eta > 0.0 && noise.bernoulli(spec.eta)) label = !label;
        ds.labels[t].push_back(label ? 1 : 0);
      }
    }
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double rate = ds.positive_rate(t);
    if (rate == 0.0 || rate == 1.0) {
      ds.warnings.push_back("target " + vocab.name(targets[t]) + " has single-class labels (" +
                            (rate == 0.0 ? "all negative" : "all positive") + ")");
    }
  }
  return ds;
}

Scene craft_confusion_case() {
  Scene s(5);
  const auto bob = s.add_entity("Bob", 0);
  const auto joe = s.add_entity("Joe", 1);
  const auto sue = s.add_entity("Sue", 2);
  const auto joan = s.add_entity("Joan", 3);
  const auto bill = s.add_entity("Bill", 4);
  s.add_atom("Insulted", {bob, joe});
  s.add_atom("Likes", {sue, joe});
  s.add_atom("Likes", {joan, bill});
  s.add_atom("Revenges", {sue, bob});
  return s;
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("spec key '" + key + "': expected a number, got '" + v + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("spec key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

DistributionSpec read_spec(std::istream& in, const std::string& base_dir) {
  DistributionSpec spec = default_spec();
  const std::filesystem::path dir(base_dir);
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_relative() ? dir / path : path).string();
  };
  std::vector<CoreRule> loaded_rules = spec.rules;
  std::vector<std::string> plant;
  bool plant_given = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("spec line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "N") spec.blocks = parse_uint(key, value);
    else if (key == "M") spec.max_offset = static_cast<int>(parse_uint(key, value));
    else if (key == "h") spec.h = parse_uint(key, value);
    else if (key == "seed") spec.seed = parse_uint(key, value);
    else if (key == "rho") spec.rho = parse_double(key, value);
    else if (key == "eta") spec.eta = parse_double(key, value);
    else if (key == "plant_rate") spec.plant_rate = parse_double(key, value);
    else if (key == "density") spec.default_density = parse_double(key, value);
    else if (key.rfind("density.", 0) == 0) spec.densities[key.substr(8)] = parse_double(key, value);
    else if (key == "entities") {
      const auto dash = value.find('-');
      if (dash == std::string::npos) {
        spec.entities_min = spec.entities_max = parse_uint(key, value);
      } else {
        spec.entities_min = parse_uint(key, trim(value.substr(0, dash)));
        spec.entities_max = parse_uint(key, trim(value.substr(dash + 1)));
      }
    } else if (key == "vocab") {
      spec.vocab = std::make_shared<const AugmentedVocabulary>(load_vocabulary(resolve(value)));
    } else if (key == "rules") {
      loaded_rules = load_rules(resolve(value));
    } else if (key == "plant") {
      plant_given = true;
      std::istringstream f(value);
      std::string name;
      while (std::getline(f, name, ',')) {
        if (!trim(name).empty()) plant.push_back(trim(name));
      }
    } else {
      throw ConfigError("spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (plant_given) {
    spec.rules.clear();
    for (const auto& name : plant) {
      const auto it = std::find_if(loaded_rules.begin(), loaded_rules.end(),
                                   [&](const CoreRule& r) { return r.name() == name; });
      if (it == loaded_rules.end()) throw ConfigError("spec plants unknown rule '" + name + "'");
      spec.rules.push_back(*it);
    }
  } else {
    spec.rules = loaded_rules;
  }
  spec.validate();
  return spec;
}

DistributionSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file '" + path + "'");
  return read_spec(in, std::filesystem::path(path).parent_path().string());
}

void write_spec(std::ostream& out, const DistributionSpec& spec) {
  out << "N=" << spec.blocks << "\nM=" << spec.max_offset << "\nh=" << spec.h
      << "\nentities=" << spec.entities_min << '-' << spec.entities_max
      << "\ndensity=" << spec.default_density << '\n';
  for (const auto& [name, p] : spec.densities) out << "density." << name << '=' << p << '\n';
  out << "plant_rate=" << spec.plant_rate << "\nrho=" << spec.rho << "\neta=" << spec.eta
      << "\nseed=" << spec.seed << '\n';
  out << "plant=";
  for (std::size_t i = 0; i < spec.rules.size(); ++i) out << (i ? "," : "") << spec.rules[i].name();
  out << '\n';
}

}  // namespace uri
