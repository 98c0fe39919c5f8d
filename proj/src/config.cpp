#include "greenedge/config.hpp"

#include "greenedge/error.hpp"

#include <fstream>

namespace greenedge {

using nlohmann::json;

namespace {

json synthJson(const TraceSource& aSource) {
  const auto& s = aSource.synth;
  return {{"path", aSource.path},
          {"mean", s.mean},
          {"amplitude", s.amplitude},
          {"peak_hour", s.peak_hour},
          {"noise_sigma", s.noise_sigma},
          {"day_count", s.day_count},
          {"slots_per_day", s.slots_per_day},
          {"start_hour", s.start_hour}};
}

TraceSource synthFrom(const json& aDoc) {
  TraceSource myOut;
  auto&       s = myOut.synth;
  myOut.path      = aDoc.at("path").get<std::string>();
  s.mean          = aDoc.at("mean").get<double>();
  s.amplitude     = aDoc.at("amplitude").get<double>();
  s.peak_hour     = aDoc.at("peak_hour").get<double>();
  s.noise_sigma   = aDoc.at("noise_sigma").get<double>();
  s.day_count     = aDoc.at("day_count").get<int>();
  s.slots_per_day = aDoc.at("slots_per_day").get<int>();
  s.start_hour    = aDoc.at("start_hour").get<double>();
  return myOut;
}

void collectKeys(const json&               aDoc,
                 const std::string&        aPrefix,
                 std::vector<std::string>& aOut) {
  for (const auto& [k, v] : aDoc.items()) {
    const auto myKey = aPrefix.empty() ? k : aPrefix + "." + k;
    if (v.is_object()) {
      collectKeys(v, myKey, aOut);
    } else {
      aOut.push_back(myKey);
    }
  }
}

std::string validKeysText() {
  std::string myOut;
  for (const auto& k : configKeys()) {
    myOut += "\n  " + k;
  }
  return myOut;
}

[[noreturn]] void reject(const std::string& aWhat) {
  throw ValidationError(aWhat + "; valid keys:" + validKeysText());
}

bool sameKind(const json& aDefault, const json& aValue) {
  if (aDefault.is_number_float()) {
    return aValue.is_number();
  }
  if (aDefault.is_number_unsigned()) {
    return aValue.is_number_unsigned() or
           (aValue.is_number_integer() and aValue.get<std::int64_t>() >= 0);
  }
  if (aDefault.is_number_integer()) {
    return aValue.is_number_integer();
  }
  if (aDefault.is_array()) {
    if (not aValue.is_array()) {
      return false;
    }
    for (const auto& e : aValue) {
      if (not e.is_number()) {
        return false;
      }
    }
    return true;
  }
  return aDefault.type() == aValue.type();
}

std::string kindName(const json& aDefault) {
  if (aDefault.is_number_float()) {
    return "a number";
  } else if (aDefault.is_number_unsigned()) {
    return "a non-negative integer";
  } else if (aDefault.is_number_integer()) {
    return "an integer";
  } else if (aDefault.is_array()) {
    return "an array of numbers";
  } else if (aDefault.is_boolean()) {
    return "a boolean";
  }
  return "a string";
}

// Writes aValue at the dotted path aKey below aTarget, checking the key and
// the value type against what is already there.
void assign(json& aTarget, const std::string& aKey, const json& aValue) {
  json* mySlot = &aTarget;
  std::size_t myStart = 0;
  while (true) {
    const auto myDot  = aKey.find('.', myStart);
    const auto myPart = aKey.substr(myStart, myDot - myStart);
    if (not mySlot->is_object() or not mySlot->contains(myPart)) {
      reject("unknown config key '" + aKey + "'");
    }
    mySlot = &(*mySlot)[myPart];
    if (myDot == std::string::npos) {
      break;
    }
    myStart = myDot + 1;
  }
  if (mySlot->is_object()) {
    if (not aValue.is_object()) {
      reject("config key '" + aKey + "' is a section, not a value");
    }
    for (const auto& [k, v] : aValue.items()) {
      assign(aTarget, aKey + "." + k, v);
    }
    return;
  }
  if (not sameKind(*mySlot, aValue)) {
    reject("config key '" + aKey + "' must be " + kindName(*mySlot) +
           ", got " + aValue.dump());
  }
  if (mySlot->is_number_float()) {
    *mySlot = aValue.get<double>();
  } else {
    *mySlot = aValue;
  }
}

ExperimentConfig fromFullJson(const json& aDoc) {
  ExperimentConfig c;
  c.seed   = aDoc.at("seed").get<std::uint64_t>();
  c.policy = policyFromString(aDoc.at("policy").get<std::string>());

  c.traces.load   = synthFrom(aDoc.at("traces").at("load"));
  c.traces.energy = synthFrom(aDoc.at("traces").at("energy"));

  const auto& s = aDoc.at("site");
  auto&       p = c.site;
  p.gamma_max        = s.at("gamma_max").get<double>();
  p.k_max            = s.at("k_max").get<int>();
  p.d_max            = s.at("d_max").get<int>();
  p.lambda_max       = s.at("lambda_max").get<double>();
  p.bs_active_power  = s.at("bs_active_power").get<double>();
  p.bs_load_coeff    = s.at("bs_load_coeff").get<double>();
  p.bs_sleep_power   = s.at("bs_sleep_power").get<double>();
  p.vm_idle          = s.at("vm_idle").get<double>();
  p.vm_load_coeff    = s.at("vm_load_coeff").get<double>();
  p.driver_power     = s.at("driver_power").get<double>();
  p.driver_tune_cost = s.at("driver_tune_cost").get<double>();
  p.vm_switch_cost   = s.at("vm_switch_cost").get<double>();
  p.bs_wake_cost     = s.at("bs_wake_cost").get<double>();
  p.harvest_peak     = s.at("harvest_peak").get<double>();
  p.battery_capacity = s.at("battery_capacity").get<double>();
  p.battery_init     = s.at("battery_init").get<double>();
  p.load_weights     = s.at("load_weights").get<std::vector<double>>();
  p.harvest_weights  = s.at("harvest_weights").get<std::vector<double>>();

  const auto& l = aDoc.at("llc");
  c.llc.horizon      = l.at("horizon").get<int>();
  c.llc.max_vm_delta = l.at("max_vm_delta").get<int>();
  c.llc.prune        = l.at("prune").get<bool>();
  c.llc.min_drivers  = l.at("min_drivers").get<bool>();

  const auto& w = aDoc.at("weights");
  c.weights.eta         = w.at("eta").get<double>();
  c.weights.energy_norm = w.at("energy_norm").get<double>();
  c.weights.max_deficit = w.at("max_deficit").get<double>();

  const auto& f = aDoc.at("forecaster");
  auto&       m = c.forecaster;
  m.mode                      = forecastModeFromString(f.at("mode").get<std::string>());
  m.load_model                = f.at("load_model").get<std::string>();
  m.energy_model              = f.at("energy_model").get<std::string>();
  m.hidden_dim                = f.at("hidden_dim").get<int>();
  m.window                    = f.at("window").get<int>();
  m.train.learning_rate       = f.at("learning_rate").get<double>();
  m.train.epochs              = f.at("epochs").get<int>();
  m.train.grad_clip_norm      = f.at("grad_clip_norm").get<double>();
  m.train.seed                = f.at("train_seed").get<std::uint64_t>();
  m.train.early_stop_patience = f.at("early_stop_patience").get<int>();
  m.train.validation_fraction = f.at("validation_fraction").get<double>();

  c.eval_begin = aDoc.at("eval").at("begin").get<std::size_t>();
  c.eval_end   = aDoc.at("eval").at("end").get<std::size_t>();
  c.validate();
  return c;
}

} // namespace

json toJson(const ExperimentConfig& c) {
  const auto& p = c.site;
  const auto& m = c.forecaster;
  return {
      {"seed", c.seed},
      {"policy", toString(c.policy)},
      {"traces",
       {{"load", synthJson(c.traces.load)},
        {"energy", synthJson(c.traces.energy)}}},
      {"site",
       {{"gamma_max", p.gamma_max},
        {"k_max", p.k_max},
        {"d_max", p.d_max},
        {"lambda_max", p.lambda_max},
        {"bs_active_power", p.bs_active_power},
        {"bs_load_coeff", p.bs_load_coeff},
        {"bs_sleep_power", p.bs_sleep_power},
        {"vm_idle", p.vm_idle},
        {"vm_load_coeff", p.vm_load_coeff},
        {"driver_power", p.driver_power},
        {"driver_tune_cost", p.driver_tune_cost},
        {"vm_switch_cost", p.vm_switch_cost},
        {"bs_wake_cost", p.bs_wake_cost},
        {"harvest_peak", p.harvest_peak},
        {"battery_capacity", p.battery_capacity},
        {"battery_init", p.battery_init},
        {"load_weights", p.load_weights},
        {"harvest_weights", p.harvest_weights}}},
      {"llc",
       {{"horizon", c.llc.horizon},
        {"max_vm_delta", c.llc.max_vm_delta},
        {"prune", c.llc.prune},
        {"min_drivers", c.llc.min_drivers}}},
      {"weights",
       {{"eta", c.weights.eta},
        {"energy_norm", c.weights.energy_norm},
        {"max_deficit", c.weights.max_deficit}}},
      {"forecaster",
       {{"mode", toString(m.mode)},
        {"load_model", m.load_model},
        {"energy_model", m.energy_model},
        {"hidden_dim", m.hidden_dim},
        {"window", m.window},
        {"learning_rate", m.train.learning_rate},
        {"epochs", m.train.epochs},
        {"grad_clip_norm", m.train.grad_clip_norm},
        {"train_seed", m.train.seed},
        {"early_stop_patience", m.train.early_stop_patience},
        {"validation_fraction", m.train.validation_fraction}}},
      {"eval", {{"begin", c.eval_begin}, {"end", c.eval_end}}},
  };
}

std::vector<std::string> configKeys() {
  std::vector<std::string> myOut;
  collectKeys(toJson(ExperimentConfig{}), "", myOut);
  return myOut;
}

ExperimentConfig configFromJson(const json& aDoc) {
  if (not aDoc.is_object()) {
    throw ValidationError("config document must be a JSON object");
  }
  auto myFull = toJson(ExperimentConfig{});
  for (const auto& [k, v] : aDoc.items()) {
    assign(myFull, k, v);
  }
  return fromFullJson(myFull);
}

ExperimentConfig loadConfig(const std::filesystem::path& aPath) {
  std::ifstream myStream(aPath);
  if (not myStream) {
    throw ValidationError("cannot open config file " + aPath.string());
  }
  json myDoc;
  try {
    myDoc = json::parse(myStream);
  } catch (const json::parse_error& aErr) {
    throw ValidationError("config file " + aPath.string() +
                          " is not valid JSON: " + aErr.what());
  }
  return configFromJson(myDoc);
}

void saveConfig(const std::filesystem::path& aPath,
                const ExperimentConfig&      aConfig) {
  std::ofstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot write " + aPath.string());
  }
  myStream << toJson(aConfig).dump(2) << '\n';
}

ExperimentConfig applyOverrides(const ExperimentConfig&         aConfig,
                                const std::vector<std::string>& aOverrides) {
  auto myDoc = toJson(aConfig);
  for (const auto& o : aOverrides) {
    const auto myEq = o.find('=');
    if (myEq == std::string::npos or myEq == 0) {
      throw ValidationError("override '" + o + "' is not of the form key=value");
    }
    const auto myKey  = o.substr(0, myEq);
    const auto myText = o.substr(myEq + 1);
    auto       myValue = json::parse(myText, nullptr, false);
    if (myValue.is_discarded()) {
      myValue = myText;
    }
    assign(myDoc, myKey, myValue);
  }
  return fromFullJson(myDoc);
}

} // namespace greenedge
