#include "mgfn/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace mgfn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using Section = std::map<std::string, std::string>;

std::map<std::string, Section> parse_ini(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("missing config file: " + file.string());
  std::map<std::string, Section> sections;
  std::string line, current;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": malformed section");
      current = trim(t.substr(1, t.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": expected key = value");
    if (current.empty())
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": key outside a section");
    const std::string key = trim(t.substr(0, eq));
    if (sections[current].count(key))
      throw ConfigError(file.string() + ": duplicate key '" + key + "' in [" + current + "]");
    sections[current][key] = trim(t.substr(eq + 1));
  }
  return sections;
}

long long to_int(const std::string& v, const std::string& what) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(what + " must be an integer, got '" + v + "'");
  return out;
}

double to_real(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(what + " must be a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(what + " must be a boolean, got '" + v + "'");
}

// Pulls keys out of a section and verifies nothing unknown remains.
struct SectionReader {
  std::string name;
  Section entries;

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second;
    entries.erase(it);
    return v;
  }

  void finish() const {
    if (!entries.empty())
      throw ConfigError("unknown key '" + entries.begin()->first + "' in [" + name + "]");
  }
};

}  // namespace

std::int64_t parse_duration(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty duration");
  std::int64_t multiplier = 1;
  std::string digits = t;
  switch (t.back()) {
    case 's': multiplier = 1; digits = t.substr(0, t.size() - 1); break;
    case 'm': multiplier = 60; digits = t.substr(0, t.size() - 1); break;
    case 'h': multiplier = 3600; digits = t.substr(0, t.size() - 1); break;
    case 'd': multiplier = 86400; digits = t.substr(0, t.size() - 1); break;
    default: break;
  }
  return to_int(digits, "duration") * multiplier;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& file) {
  PipelineConfig cfg;
  auto sections = parse_ini(file);

  const std::set<std::string> known = {"data", "synth", "mgd", "fusion", "model", "train", "eval"};
  for (const auto& [name, entries] : sections)
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");

  const auto reader = [&sections](const std::string& name) {
    SectionReader r{name, {}};
    if (sections.count(name)) r.entries = sections[name];
    return r;
  };

  {
    auto s = reader("data");
    if (auto v = s.take("trips")) cfg.data.trips_path = *v;
    if (auto v = s.take("regions")) cfg.data.regions_path = *v;
    if (auto v = s.take("bin_width")) cfg.data.bin_width_s = parse_duration(*v);
    if (auto v = s.take("period")) cfg.data.period_s = parse_duration(*v);
    const auto start = s.take("window_start");
    const auto end = s.take("window_end");
    if (start.has_value() != end.has_value())
      throw ConfigError("window_start and window_end must be given together");
    if (start) cfg.data.window = TimeWindow{parse_timestamp(*start), parse_timestamp(*end)};
    s.finish();
  }
  {
    auto s = reader("synth");
    if (auto v = s.take("n_residential")) cfg.synth.n_residential = to_int(*v, "n_residential");
    if (auto v = s.take("n_office")) cfg.synth.n_office = to_int(*v, "n_office");
    if (auto v = s.take("days")) cfg.synth.days = to_int(*v, "days");
    if (auto v = s.take("base_rate")) cfg.synth.base_rate = to_real(*v, "base_rate");
    if (auto v = s.take("noise")) cfg.synth.noise = to_bool(*v, "noise");
    if (auto v = s.take("seed")) cfg.synth.seed = static_cast<std::uint64_t>(to_int(*v, "seed"));
    s.finish();
  }
  {
    auto s = reader("mgd");
    if (auto v = s.take("c_mean")) cfg.mgd.component_weights(0) = to_real(*v, "c_mean");
    if (auto v = s.take("c_var")) cfg.mgd.component_weights(1) = to_real(*v, "c_var");
    if (auto v = s.take("c_unif")) cfg.mgd.component_weights(2) = to_real(*v, "c_unif");
    if (auto v = s.take("c_ss")) cfg.mgd.component_weights(3) = to_real(*v, "c_ss");
    if (auto v = s.take("normalization")) {
      if (*v == "minmax") cfg.mgd.normalization = Normalization::MinMax;
      else if (*v == "identity") cfg.mgd.normalization = Normalization::Identity;
      else throw ConfigError("normalization must be minmax or identity");
    }
    if (auto v = s.take("lambda")) cfg.mgd.lambda = to_real(*v, "lambda");
    if (auto v = s.take("use_circular")) cfg.mgd.use_circular = to_bool(*v, "use_circular");
    s.finish();
  }
  {
    auto s = reader("fusion");
    if (auto v = s.take("n_patterns")) cfg.fusion.n_patterns = to_int(*v, "n_patterns");
    if (auto v = s.take("linkage")) {
      if (*v == "average") cfg.fusion.linkage = Linkage::Average;
      else if (*v == "complete") cfg.fusion.linkage = Linkage::Complete;
      else if (*v == "single") cfg.fusion.linkage = Linkage::Single;
      else throw ConfigError("linkage must be average, complete or single");
    }
    if (auto v = s.take("fuse_op")) {
      if (*v == "mean") cfg.fusion.fuse_op = FuseOp::Mean;
      else if (*v == "sum") cfg.fusion.fuse_op = FuseOp::Sum;
      else throw ConfigError("fuse_op must be mean or sum");
    }
    s.finish();
  }
  {
    auto s = reader("model");
    if (auto v = s.take("d")) cfg.model.hidden = to_int(*v, "d");
    if (auto v = s.take("heads")) cfg.model.heads = to_int(*v, "heads");
    if (auto v = s.take("layers")) cfg.model.layers = to_int(*v, "layers");
    if (auto v = s.take("seed")) cfg.model.seed = static_cast<std::uint64_t>(to_int(*v, "seed"));
    s.finish();
  }
  {
    auto s = reader("train");
    if (auto v = s.take("optimizer")) {
      if (*v == "adam") cfg.train.optimizer = Optimizer::Adam;
      else if (*v == "sgd") cfg.train.optimizer = Optimizer::Sgd;
      else throw ConfigError("optimizer must be adam or sgd");
    }
    if (auto v = s.take("lr")) cfg.train.learning_rate = to_real(*v, "lr");
    if (auto v = s.take("epochs")) cfg.train.epochs = to_int(*v, "epochs");
    if (auto v = s.take("ablation")) {
      std::string rest = *v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string flag = trim(rest.substr(0, comma));
        rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
        if (flag.empty()) continue;
        if (flag == "no_mgf") cfg.train.ablation.no_mgf = true;
        else if (flag == "no_ipmp") cfg.train.ablation.no_ipmp = true;
        else if (flag == "no_ipmca") cfg.train.ablation.no_ipmca = true;
        else throw ConfigError("unknown ablation flag '" + flag + "'");
      }
    }
    s.finish();
  }
  {
    auto s = reader("eval");
    if (auto v = s.take("alpha")) cfg.eval.alpha = to_real(*v, "alpha");
    if (auto v = s.take("folds")) cfg.eval.folds = to_int(*v, "folds");
    if (auto v = s.take("k")) cfg.eval.k = to_int(*v, "k");
    s.finish();
  }

  cfg.train.seed = cfg.model.seed;
  cfg.train.validate();
  if (cfg.train.learning_rate <= 0.0) throw ConfigError("lr must be positive");
  cfg.mgd.validate();
  return cfg;
}

}  // namespace mgfn
