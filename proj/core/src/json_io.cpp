#include "mcqn/json_io.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace mcqn {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SpecError(where + ": missing \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SpecError(where + ": field \"" + key + "\" has the wrong type");
  }
}

json parse_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

DistributionSpec parse_distribution(const json& obj, const std::string& where) {
  const auto name = get_field<std::string>(obj, "family", where);
  const auto family = parse_family(name);
  if (!family) throw SpecError(where + ": unknown distribution family \"" + name + "\"");
  const json params = obj.contains("params") ? obj.at("params") : json::object();
  const std::string at = where + " params";
  switch (*family) {
    case DistributionFamily::kExponential:
      return DistributionSpec::exponential(get_field<double>(params, "rate", at));
    case DistributionFamily::kGamma:
      return DistributionSpec::gamma(get_field<double>(params, "shape", at),
                                     get_field<double>(params, "scale", at));
    case DistributionFamily::kDeterministic:
      return DistributionSpec::deterministic(get_field<double>(params, "value", at));
    case DistributionFamily::kUniform:
      return DistributionSpec::uniform(get_field<double>(params, "low", at),
                                       get_field<double>(params, "high", at));
  }
  throw SpecError(where + ": unsupported distribution");
}

json distribution_json(const DistributionSpec& d) {
  json params;
  switch (d.family) {
    case DistributionFamily::kExponential: params = {{"rate", d.first}}; break;
    case DistributionFamily::kGamma: params = {{"shape", d.first}, {"scale", d.second}}; break;
    case DistributionFamily::kDeterministic: params = {{"value", d.first}}; break;
    case DistributionFamily::kUniform: params = {{"low", d.first}, {"high", d.second}}; break;
  }
  return {{"family", to_string(d.family)}, {"params", params}};
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd parse_vector(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw SpecError(where + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw SpecError(where + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

json envelope_json(const EnvelopeFunction& w) { return {{"c", w.c}, {"p", w.p}}; }

EnvelopeFunction parse_envelope(const json& obj, const char* key) {
  const std::string where = std::string("candidate ") + key;
  if (!obj.contains(key)) throw SpecError("candidate: missing \"" + std::string(key) + "\"");
  return {get_field<double>(obj.at(key), "c", where), get_field<double>(obj.at(key), "p", where)};
}

}  // namespace

NetworkSpec parse_network(const std::string& text) {
  const json doc = parse_text(text, "network spec");
  if (!doc.is_object() || !doc.contains("classes") || !doc.at("classes").is_array()) {
    throw SpecError("network spec: \"classes\" array required");
  }
  const json& list = doc.at("classes");
  const int K = static_cast<int>(list.size());
  if (K == 0) throw SpecError("network spec: no classes");
  std::vector<ClassSpec> classes(static_cast<std::size_t>(K));
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  int num_stations = 0;
  for (const json& c : list) {
    const int id = get_field<int>(c, "id", "class");
    const std::string where = "class " + std::to_string(id);
    if (id < 1 || id > K) throw SpecError(where + ": ids must run from 1 to the number of classes");
    if (seen[static_cast<std::size_t>(id - 1)]) throw SpecError(where + ": duplicate id");
    seen[static_cast<std::size_t>(id - 1)] = true;
    ClassSpec& spec = classes[static_cast<std::size_t>(id - 1)];
    const int station = get_field<int>(c, "station", where);
    if (station < 1) throw SpecError(where + ": stations are numbered from 1");
    spec.station = station - 1;
    num_stations = std::max(num_stations, station);
    if (c.contains("arrival") && !c.at("arrival").is_null()) {
      spec.arrival = parse_distribution(c.at("arrival"), where + " arrival");
    }
    if (!c.contains("service")) throw SpecError(where + ": missing \"service\"");
    spec.service = parse_distribution(c.at("service"), where + " service");
    if (c.contains("route")) {
      if (!c.at("route").is_array()) throw SpecError(where + ": \"route\" must be an array");
      for (const json& r : c.at("route")) {
        const int to = get_field<int>(r, "to", where + " route");
        if (to < 1 || to > K) throw SpecError(where + ": route to unknown class " + std::to_string(to));
        spec.routes.emplace_back(to - 1, get_field<double>(r, "prob", where + " route"));
      }
    }
  }
  if (doc.contains("stations")) {
    const int declared = get_field<int>(doc, "stations", "network spec");
    if (declared < num_stations) throw SpecError("network spec: \"stations\" below the highest station used");
    num_stations = declared;
  }

  Discipline discipline;
  if (doc.contains("discipline")) {
    const json& d = doc.at("discipline");
    const auto name = get_field<std::string>(d, "kind", "discipline");
    const auto kind = parse_discipline(name);
    if (!kind) throw SpecError("discipline: unknown kind \"" + name + "\"");
    discipline.kind = *kind;
    if (d.contains("ranks")) discipline.ranks = get_field<std::vector<int>>(d, "ranks", "discipline");
  }
  return make_network(classes, num_stations, std::move(discipline));
}

std::string network_to_json(const NetworkSpec& spec) {
  json classes = json::array();
  for (int k = 0; k < spec.num_classes; ++k) {
    int station = 0;
    for (int j = 0; j < spec.num_stations; ++j) {
      if (spec.constituency(j, k) == 1.0) station = j + 1;
    }
    json route = json::array();
    for (int l = 0; l < spec.num_classes; ++l) {
      if (spec.routing(k, l) != 0.0) route.push_back({{"to", l + 1}, {"prob", spec.routing(k, l)}});
    }
    const auto& arrival = spec.arrival_distributions[static_cast<std::size_t>(k)];
    classes.push_back({{"id", k + 1},
                       {"station", station},
                       {"arrival", arrival ? distribution_json(*arrival) : json(nullptr)},
                       {"service", distribution_json(spec.service_distributions[static_cast<std::size_t>(k)])},
                       {"route", route}});
  }
  json discipline = {{"kind", to_string(spec.discipline.kind)}};
  if (!spec.discipline.ranks.empty()) discipline["ranks"] = spec.discipline.ranks;
  return json{{"classes", classes}, {"stations", spec.num_stations}, {"discipline", discipline}}.dump(2);
}

SimState parse_initial_state(const std::string& text, const ValidatedSpec& spec) {
  const json doc = parse_text(text, "initial state");
  const int K = spec.num_classes();
  const auto queues = get_field<std::vector<std::vector<double>>>(doc, "queues", "initial state");
  const auto u = get_field<std::vector<double>>(doc, "u", "initial state");
  const auto v = get_field<std::vector<double>>(doc, "v", "initial state");
  if (static_cast<int>(queues.size()) != K || static_cast<int>(u.size()) != K ||
      static_cast<int>(v.size()) != K) {
    throw SpecError("initial state: \"queues\", \"u\" and \"v\" need one entry per class");
  }
  SimState s;
  s.clock = 0.0;
  s.queues.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (double age : queues[static_cast<std::size_t>(k)]) {
      if (!(age >= 0.0) || !std::isfinite(age)) throw SpecError("initial state: ages must be finite and nonnegative");
      s.queues[static_cast<std::size_t>(k)].push_back(-age);
    }
  }
  s.u = u;
  s.v = v;
  s.effort_num.assign(static_cast<std::size_t>(K), 0);
  s.z.assign(static_cast<std::size_t>(K), 0.0);
  assign_effort(spec, s);
  const auto problems = check_state(spec, s);
  if (!problems.empty()) throw SpecError("initial state: " + problems.front());
  return s;
}

std::string initial_state_to_json(const SimState& state) {
  json queues = json::array();
  for (const auto& q : state.queues) {
    json ages = json::array();
    for (double entered : q) ages.push_back(state.clock - entered);
    queues.push_back(ages);
  }
  return json{{"queues", queues}, {"u", state.u}, {"v", state.v}}.dump(2);
}

std::string trajectory_to_json(const FluidTrajectory& traj) {
  json breakpoints = json::array();
  for (std::size_t i = 0; i < traj.num_breakpoints(); ++i) {
    breakpoints.push_back({{"time", traj.times()[i]}, {"level", vector_json(traj.levels()[i])}});
  }
  json segments = json::array();
  for (std::size_t i = 0; i < traj.num_segments(); ++i) {
    segments.push_back({{"start", traj.times()[i]},
                        {"end", traj.times()[i + 1]},
                        {"rates", vector_json(traj.rates()[i])},
                        {"slope", vector_json(traj.slope(i))}});
  }
  json out = {{"num_classes", traj.num_classes()},
              {"breakpoints", breakpoints},
              {"segments", segments},
              {"empty_time", traj.empty_time() ? json(*traj.empty_time()) : json(nullptr)}};
  return out.dump(2);
}

FluidTrajectory parse_trajectory(const std::string& text) {
  const json doc = parse_text(text, "trajectory");
  if (!doc.contains("breakpoints") || !doc.at("breakpoints").is_array()) {
    throw SpecError("trajectory: \"breakpoints\" array required");
  }
  std::vector<double> times;
  std::vector<Eigen::VectorXd> levels;
  for (const json& b : doc.at("breakpoints")) {
    times.push_back(get_field<double>(b, "time", "trajectory breakpoint"));
    if (!b.contains("level")) throw SpecError("trajectory breakpoint: missing \"level\"");
    levels.push_back(parse_vector(b.at("level"), "trajectory level"));
  }
  std::vector<Eigen::VectorXd> rates;
  if (doc.contains("segments")) {
    for (const json& s : doc.at("segments")) {
      if (!s.contains("rates")) throw SpecError("trajectory segment: missing \"rates\"");
      rates.push_back(parse_vector(s.at("rates"), "trajectory rates"));
    }
  }
  std::optional<double> empty;
  if (doc.contains("empty_time") && doc.at("empty_time").is_number()) {
    empty = doc.at("empty_time").get<double>();
  }
  try {
    return FluidTrajectory(std::move(times), std::move(levels), std::move(rates), empty);
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(e.what());
  }
}

std::string candidate_to_json(const LyapunovCandidate& v) {
  json out = {{"form", to_string(v.form())}};
  switch (v.form()) {
    case CandidateForm::kWeightedLinearSquared:
      out["xi"] = vector_json(v.weights());
      break;
    case CandidateForm::kWeightedQuadratic: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < v.matrix().rows(); ++i) rows.push_back(vector_json(v.matrix().row(i).transpose()));
      out["matrix"] = rows;
      break;
    }
    case CandidateForm::kMaxLinearSquared: {
      json pieces = json::array();
      for (const auto& p : v.pieces()) pieces.push_back(vector_json(p));
      out["pieces"] = pieces;
      break;
    }
  }
  out["w1"] = envelope_json(v.w1());
  out["w2"] = envelope_json(v.w2());
  out["w3"] = envelope_json(v.w3());
  return out.dump(2);
}

LyapunovCandidate parse_candidate(const std::string& text) {
  const json doc = parse_text(text, "candidate");
  const auto name = get_field<std::string>(doc, "form", "candidate");
  const auto form = parse_candidate_form(name);
  if (!form) throw SpecError("candidate: unknown form \"" + name + "\"");
  const EnvelopeFunction w1 = parse_envelope(doc, "w1");
  const EnvelopeFunction w2 = parse_envelope(doc, "w2");
  const EnvelopeFunction w3 = parse_envelope(doc, "w3");
  try {
    switch (*form) {
      case CandidateForm::kWeightedLinearSquared:
        if (!doc.contains("xi")) throw SpecError("candidate: missing \"xi\"");
        return LyapunovCandidate::weighted_linear_squared(parse_vector(doc.at("xi"), "candidate xi"),
                                                          w1, w2, w3);
      case CandidateForm::kWeightedQuadratic: {
        if (!doc.contains("matrix") || !doc.at("matrix").is_array()) {
          throw SpecError("candidate: \"matrix\" array required");
        }
        const json& rows = doc.at("matrix");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const Eigen::VectorXd row = parse_vector(rows[static_cast<std::size_t>(i)], "candidate matrix row");
          if (row.size() != n) throw SpecError("candidate: matrix must be square");
          a.row(i) = row.transpose();
        }
        return LyapunovCandidate::weighted_quadratic(std::move(a), w1, w2, w3);
      }
      case CandidateForm::kMaxLinearSquared: {
        if (!doc.contains("pieces") || !doc.at("pieces").is_array()) {
          throw SpecError("candidate: \"pieces\" array required");
        }
        std::vector<Eigen::VectorXd> pieces;
        for (const json& p : doc.at("pieces")) pieces.push_back(parse_vector(p, "candidate piece"));
        return LyapunovCandidate::max_linear_squared(std::move(pieces), w1, w2, w3);
      }
    }
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(std::string("candidate: ") + e.what());
  }
  throw SpecError("candidate: unsupported form");
}

}  // namespace mcqn
