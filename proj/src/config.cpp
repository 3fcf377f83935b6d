#include "asa/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace asa {

std::string margin_mode_name(MarginMode m) {
  return m == MarginMode::fixed ? "fixed" : "data_driven";
}

MarginMode margin_mode_from_name(const std::string& name) {
  if (name == "fixed") return MarginMode::fixed;
  if (name == "data_driven") return MarginMode::data_driven;
  throw Error(msg("unknown margin_mode '", name, "' (expected fixed|data_driven)"));
}

void RunConfig::validate() const {
  require(lambda >= 0.0 && lambda <= 1.0, "config: lambda must be in [0,1], got ", lambda);
  require(batch_size >= 1, "config: batch_size must be >= 1");
  require(learning_rate > 0.0, "config: learning_rate must be > 0");
  require(weight_decay >= 0.0, "config: weight_decay must be >= 0");
  require(patience >= 1, "config: patience must be >= 1");
  require(max_epochs >= 1, "config: max_epochs must be >= 1");
  require(margin_scale > 0.0, "config: margin_scale must be > 0");
  require(ema_decay >= 0.0 && ema_decay < 1.0, "config: ema_decay must be in [0,1)");
  require(margins.size() == 7, "config: expected 7 margins, got ", margins.size());
  for (double m : margins)
    require(std::isfinite(m) && m >= 0.0, "config: margins must be finite and >= 0");
  require(prompt_dim >= 1 && speech_dim >= 1 && hidden_dim >= 1,
          "config: model dims must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    require(!item.empty(), "config: empty entry in ", what);
    size_t pos = 0;
    double v = std::stod(item, &pos);
    require(pos == item.size(), "config: bad number '", item, "' in ", what);
    out.push_back(v);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(msg("config: bad boolean '", v, "' for ", key));
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open ", path.string());
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    require(eq != std::string::npos, "config ", path.string(), ":", lineno,
            ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    require(!key.empty() && !val.empty(), "config ", path.string(), ":", lineno,
            ": empty key or value");
    try {
      if (key == "aspect") cfg.aspect = aspect_from_name(val);
      else if (key == "lambda") cfg.lambda = std::stod(val);
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
      else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
      else if (key == "patience") cfg.patience = std::stoi(val);
      else if (key == "max_epochs") cfg.max_epochs = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "margin_mode") cfg.margin_mode = margin_mode_from_name(val);
      else if (key == "margin_scale") cfg.margin_scale = std::stod(val);
      else if (key == "ema_decay") cfg.ema_decay = std::stod(val);
      else if (key == "margins") cfg.margins = parse_double_list(val, "margins");
      else if (key == "prompt_dim") cfg.prompt_dim = std::stoi(val);
      else if (key == "speech_dim") cfg.speech_dim = std::stoi(val);
      else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(val);
      else if (key == "positional_phases") cfg.positional_phases = parse_bool(val, key);
      else throw Error(msg("unknown key '", key, "'"));
    } catch (const std::invalid_argument&) {
      throw Error(msg("config ", path.string(), ":", lineno, ": bad value '", val, "' for ", key));
    }
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "aspect = " << aspect_name(aspect) << "\n"
     << "batch_size = " << batch_size << "\n"
     << "ema_decay = " << ema_decay << "\n"
     << "hidden_dim = " << hidden_dim << "\n"
     << "lambda = " << lambda << "\n"
     << "learning_rate = " << learning_rate << "\n"
     << "margin_mode = " << margin_mode_name(margin_mode) << "\n"
     << "margin_scale = " << margin_scale << "\n"
     << "margins = ";
  for (size_t i = 0; i < margins.size(); ++i) os << (i ? "," : "") << margins[i];
  os << "\n"
     << "max_epochs = " << max_epochs << "\n"
     << "patience = " << patience << "\n"
     << "positional_phases = " << (positional_phases ? "true" : "false") << "\n"
     << "prompt_dim = " << prompt_dim << "\n"
     << "seed = " << seed << "\n"
     << "speech_dim = " << speech_dim << "\n"
     << "weight_decay = " << weight_decay << "\n";
  return os.str();
}

uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

}  // namespace asa
