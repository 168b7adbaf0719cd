#include "gridkit/io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridkit/generator.hpp"
#include "gridkit/load.hpp"
#include "gridkit/solar.hpp"
#include "gridkit/storage.hpp"
#include "gridkit/wind.hpp"

namespace gridkit::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool numeric_start(const std::string& s) {
  if (s.empty()) return false;
  const char c = s[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (first && !numeric_start(t)) {
      first = false;
      continue;  // header row
    }
    first = false;
    rows.push_back(split(t, ','));
  }
  return rows;
}

double parse_field(const std::string& s) {
  if (s.empty()) return std::nan("");
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  return v;
}

FILE* open_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot write '" + path + "'");
  return f;
}

void stamp(FILE* f, bool timestamp) {
  if (!timestamp) return;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  std::fprintf(f, "# generated %s\n", buf);
}

}  // namespace

std::vector<BranchSpec> read_branch_csv(const std::string& path) {
  std::vector<BranchSpec> out;
  for (const auto& row : read_csv_rows(path)) {
    if (row.size() < 5) throw InputError("branch row needs from,to,r,x,b in '" + path + "'");
    out.push_back(BranchSpec::line(static_cast<int>(parse_field(row[0])),
                                   static_cast<int>(parse_field(row[1])), parse_field(row[2]),
                                   parse_field(row[3]), parse_field(row[4])));
  }
  return out;
}

std::pair<int, std::vector<BusKind>> read_bus_csv(const std::string& path) {
  std::map<int, BusKind> kinds;
  for (const auto& row : read_csv_rows(path)) {
    if (row.size() < 2) throw InputError("bus row needs bus,kind in '" + path + "'");
    const int bus = static_cast<int>(parse_field(row[0]));
    if (kinds.count(bus)) throw InputError("duplicate bus " + std::to_string(bus));
    kinds[bus] = bus_kind_from_string(row[1]);
  }
  if (kinds.empty()) throw InputError("no buses in '" + path + "'");
  const int n = kinds.rbegin()->first;
  std::vector<BusKind> out;
  for (int b = 1; b <= n; ++b) {
    auto it = kinds.find(b);
    if (it == kinds.end()) throw InputError("bus " + std::to_string(b) + " missing from '" + path + "'");
    out.push_back(it->second);
  }
  return {n, out};
}

std::vector<DispatchEntry> read_dispatch_csv(const std::string& path) {
  std::vector<DispatchEntry> out;
  for (const auto& row : read_csv_rows(path)) {
    if (row.size() < 4) throw InputError("dispatch row needs bus,p,q,vmag in '" + path + "'");
    DispatchEntry d;
    d.bus = static_cast<int>(parse_field(row[0]));
    d.p = parse_field(row[1]);
    d.q = parse_field(row[2]);
    d.vmag = parse_field(row[3]);
    out.push_back(d);
  }
  return out;
}

CaseData read_case(const std::string& branches_csv, const std::string& buses_csv,
                   const std::string& dispatch_csv, const std::string& components_json_path,
                   int slack_bus) {
  CaseData cd;
  cd.branches = read_branch_csv(branches_csv);
  std::tie(cd.n_buses, cd.kinds) = read_bus_csv(buses_csv);
  cd.dispatch = read_dispatch_csv(dispatch_csv);
  cd.slack_bus = slack_bus;
  if (!components_json_path.empty()) {
    std::ifstream in(components_json_path);
    if (!in) throw InputError("cannot open '" + components_json_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cd.components_json = ss.str();
  }
  return cd;
}

namespace {

using nlohmann::json;

void apply_generator(GeneratorParams& p, const json& j) {
  static const std::map<std::string, double GeneratorParams::*> f = {
      {"M", &GeneratorParams::M},           {"d", &GeneratorParams::d},
      {"tau_do", &GeneratorParams::tau_do}, {"tau_e", &GeneratorParams::tau_e},
      {"X_d", &GeneratorParams::X_d},       {"X_q", &GeneratorParams::X_q},
      {"X_dp", &GeneratorParams::X_dp},     {"K_a", &GeneratorParams::K_a},
      {"K_pss", &GeneratorParams::K_pss},   {"tau_pss", &GeneratorParams::tau_pss},
      {"tau_L1", &GeneratorParams::tau_L1}, {"tau_L1p", &GeneratorParams::tau_L1p},
      {"tau_L2", &GeneratorParams::tau_L2}, {"tau_L2p", &GeneratorParams::tau_L2p}};
  for (const auto& [key, ptr] : f)
    if (j.contains(key)) p.*ptr = j.at(key).get<double>();
}

void apply_wind(WindFarmParams& p, WindInitOptions& o, const json& j) {
  static const std::map<std::string, double WindFarmParams::*> f = {
      {"J_l", &WindFarmParams::J_l},
      {"J_r", &WindFarmParams::J_r},
      {"B_l", &WindFarmParams::B_l},
      {"B_r", &WindFarmParams::B_r},
      {"K_c", &WindFarmParams::K_c},
      {"d_c", &WindFarmParams::d_c},
      {"N_g", &WindFarmParams::N_g},
      {"P_a", &WindFarmParams::P_a},
      {"X_m", &WindFarmParams::X_m},
      {"X_ls", &WindFarmParams::X_ls},
      {"X_lr", &WindFarmParams::X_lr},
      {"R_s", &WindFarmParams::R_s},
      {"R_r", &WindFarmParams::R_r},
      {"gamma", &WindFarmParams::gamma_w},
      {"L_G", &WindFarmParams::L_G},
      {"R_G", &WindFarmParams::R_G},
      {"K_P_dG", &WindFarmParams::K_P_dG},
      {"K_I_dG", &WindFarmParams::K_I_dG},
      {"K_P_qG", &WindFarmParams::K_P_qG},
      {"K_I_qG", &WindFarmParams::K_I_qG},
      {"tau_G", &WindFarmParams::tau_G},
      {"K_P_dR", &WindFarmParams::K_P_dR},
      {"K_P_qR", &WindFarmParams::K_P_qR},
      {"kappa_P_dR", &WindFarmParams::kappa_P_dR},
      {"kappa_P_qR", &WindFarmParams::kappa_P_qR},
      {"kappa_I_dR", &WindFarmParams::kappa_I_dR},
      {"kappa_I_qR", &WindFarmParams::kappa_I_qR},
      {"C_dc", &WindFarmParams::C_dc},
      {"G_sw", &WindFarmParams::G_sw},
      {"S", &WindFarmParams::S},
      {"C_b", &WindFarmParams::C_b},
      {"G_b", &WindFarmParams::G_b},
      {"R_b", &WindFarmParams::R_b},
      {"L_b", &WindFarmParams::L_b}};
  for (const auto& [key, ptr] : f)
    if (j.contains(key)) p.*ptr = j.at(key).get<double>();
  if (j.contains("battery")) p.battery = j.at("battery").get<bool>();
  if (j.contains("omega_r_init")) o.omega_r = j.at("omega_r_init").get<double>();
  if (j.contains("P_r_star")) o.P_r_star = j.at("P_r_star").get<double>();
  if (j.contains("Q_r_star")) o.Q_r_star = j.at("Q_r_star").get<double>();
  if (j.contains("v_dc_star")) o.v_dc_star = j.at("v_dc_star").get<double>();
  if (j.contains("gamma") && p.gamma_w != std::floor(p.gamma_w))
    throw InputError("wind turbine count must be an integer");
}

void apply_solar(SolarFarmParams& p, const json& j) {
  static const std::map<std::string, double SolarFarmParams::*> f = {
      {"L_ac", &SolarFarmParams::L_ac},   {"R_ac", &SolarFarmParams::R_ac},
      {"K_P_d", &SolarFarmParams::K_P_d}, {"K_I_d", &SolarFarmParams::K_I_d},
      {"K_P_q", &SolarFarmParams::K_P_q}, {"K_I_q", &SolarFarmParams::K_I_q},
      {"tau_ac", &SolarFarmParams::tau_ac}, {"C_dc", &SolarFarmParams::C_dc},
      {"G_sw", &SolarFarmParams::G_sw},   {"S", &SolarFarmParams::S},
      {"R_PV", &SolarFarmParams::R_PV},   {"V_PV", &SolarFarmParams::V_PV},
      {"gamma", &SolarFarmParams::gamma_pv}};
  for (const auto& [key, ptr] : f)
    if (j.contains(key)) p.*ptr = j.at(key).get<double>();
  if (j.contains("gamma") && p.gamma_pv != std::floor(p.gamma_pv))
    throw InputError("PV generator count must be an integer");
}

void apply_storage(StorageParams& p, const json& j) {
  static const std::map<std::string, double StorageParams::*> f = {
      {"L_ac", &StorageParams::L_ac},   {"R_ac", &StorageParams::R_ac},
      {"K_P_d", &StorageParams::K_P_d}, {"K_I_d", &StorageParams::K_I_d},
      {"K_P_q", &StorageParams::K_P_q}, {"K_I_q", &StorageParams::K_I_q},
      {"tau_ac", &StorageParams::tau_ac}, {"C_dc", &StorageParams::C_dc},
      {"G_sw", &StorageParams::G_sw},   {"S", &StorageParams::S},
      {"C_b", &StorageParams::C_b},     {"G_b", &StorageParams::G_b},
      {"R_b", &StorageParams::R_b},     {"L_b", &StorageParams::L_b}};
  for (const auto& [key, ptr] : f)
    if (j.contains(key)) p.*ptr = j.at(key).get<double>();
}

}  // namespace

SystemModel build_system(const CaseData& cd) {
  json overrides = json::array();
  if (!cd.components_json.empty()) overrides = json::parse(cd.components_json);
  std::map<int, json> by_bus;
  for (const auto& rec : overrides) {
    if (!rec.contains("bus")) throw InputError("component record without a bus id");
    by_bus[rec.at("bus").get<int>()] = rec;
  }

  NetworkModel net(cd.n_buses, cd.kinds, cd.branches);
  std::vector<std::unique_ptr<Component>> comps;
  for (int b = 1; b <= cd.n_buses; ++b) {
    const BusKind kind = net.kind(b);
    auto it = by_bus.find(b);
    const json rec = (it != by_bus.end()) ? it->second : json::object();
    if (rec.contains("kind") && bus_kind_from_string(rec.at("kind").get<std::string>()) != kind)
      throw InputError("component record kind mismatch at bus " + std::to_string(b));
    switch (kind) {
      case BusKind::Generator: {
        GeneratorParams p;
        apply_generator(p, rec);
        comps.push_back(std::make_unique<Generator>(p));
        break;
      }
      case BusKind::Wind: {
        WindFarmParams p;
        WindInitOptions o;
        apply_wind(p, o, rec);
        auto w = std::make_unique<WindFarm>(p);
        w->set_init_options(o);
        comps.push_back(std::move(w));
        break;
      }
      case BusKind::Solar: {
        SolarFarmParams p;
        apply_solar(p, rec);
        comps.push_back(std::make_unique<SolarFarm>(p));
        break;
      }
      case BusKind::Storage: {
        StorageParams p;
        apply_storage(p, rec);
        comps.push_back(std::make_unique<Storage>(p));
        break;
      }
      case BusKind::Load:
        comps.push_back(std::make_unique<Load>());
        break;
      case BusKind::NonUnit:
        comps.push_back(std::make_unique<NonUnit>());
        break;
    }
  }
  return SystemModel(std::move(net), std::move(comps));
}

PowerFlowSolution initialize_case(SystemModel& sys, const CaseData& cd,
                                  const PowerFlowOptions& opt) {
  const auto cons = assemble_constraints(sys.network(), cd.dispatch, cd.slack_bus);
  const auto pf = solve_power_flow(sys.network(), cons, opt);
  sys.initialize(pf);
  return pf;
}

Scenario read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario '" + path + "'");
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (dir / p).string();
  };

  std::string branches, buses, dispatch, components;
  int slack = 0;
  Scenario sc;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("scenario line without '=': " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));

    auto kv_parse = [&](const std::string& spec) {
      std::map<std::string, std::string> kv;
      std::istringstream ss(spec);
      std::string tok;
      ss >> kv["_type"];
      while (ss >> tok) {
        const auto e = tok.find('=');
        if (e == std::string::npos) throw InputError("bad token '" + tok + "' in scenario");
        kv[tok.substr(0, e)] = tok.substr(e + 1);
      }
      return kv;
    };

    if (key == "branches") branches = resolve(val);
    else if (key == "buses") buses = resolve(val);
    else if (key == "dispatch") dispatch = resolve(val);
    else if (key == "components") components = resolve(val);
    else if (key == "slack") slack = std::stoi(val);
    else if (key == "t_end") sc.t_end = std::stod(val);
    else if (key == "dt") sc.dt = std::stod(val);
    else if (key == "fault") {
      auto kv = kv_parse(val);
      if (kv["_type"] == "impulse") {
        StateImpulse f;
        f.bus = std::stoi(kv.at("bus"));
        f.state = kv.at("state");
        if (kv.count("scale")) {
          f.value = std::stod(kv.at("scale"));
          f.scale = true;
        } else if (kv.count("value")) {
          f.value = std::stod(kv.at("value"));
          f.scale = false;
        } else {
          throw InputError("impulse fault needs scale= or value=");
        }
        f.time = kv.count("t") ? std::stod(kv.at("t")) : 0.0;
        sc.faults.emplace_back(f);
      } else if (kv["_type"] == "bus3ph") {
        ThreePhaseBusFault f;
        f.bus = std::stoi(kv.at("bus"));
        f.t_on = kv.count("t") ? std::stod(kv.at("t")) : 0.0;
        f.clearing_time = kv.count("clearing") ? std::stod(kv.at("clearing")) : 0.07;
        sc.faults.emplace_back(f);
      } else {
        throw InputError("unknown fault kind '" + kv["_type"] + "'");
      }
    } else if (key == "controller") {
      auto kv = kv_parse(val);
      if (kv["_type"] == "retrofit") {
        RetrofitRequest r;
        r.bus = std::stoi(kv.at("bus"));
        if (kv.count("gain")) r.gain_csv = resolve(kv.at("gain"));
        if (kv.count("r")) r.weights.input = std::stod(kv.at("r"));
        if (kv.count("w_state")) r.weights.state = std::stod(kv.at("w_state"));
        if (kv.count("w_current")) r.weights.current = std::stod(kv.at("w_current"));
        sc.retrofits.push_back(r);
      } else if (kv["_type"] == "wac") {
        sc.wac_gain_csv = resolve(kv.at("gain"));
      } else {
        throw InputError("unknown controller kind '" + kv["_type"] + "'");
      }
    } else {
      throw InputError("unknown scenario key '" + key + "'");
    }
  }
  if (branches.empty() || buses.empty() || dispatch.empty())
    throw InputError("scenario must name branches, buses and dispatch files");
  sc.case_data = read_case(branches, buses, dispatch, components, slack);
  return sc;
}

void write_wac_gain_csv(const std::string& path, const WideAreaGain& gain, bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "# wide-area gain: one row per generator input, 7 state columns per generator\n");
  std::fprintf(f, "# buses:");
  for (int b : gain.gen_buses) std::fprintf(f, " %d", b);
  std::fprintf(f, "\n# cost: %.15g\n# groups:", gain.J);
  for (const auto& g : gain.pattern.groups) {
    std::fprintf(f, " {");
    for (size_t i = 0; i < g.size(); ++i) std::fprintf(f, "%s%d", i ? "," : "", g[i]);
    std::fprintf(f, "}");
  }
  std::fprintf(f, "\n");
  for (Eigen::Index i = 0; i < gain.K.rows(); ++i) {
    for (Eigen::Index j = 0; j < gain.K.cols(); ++j)
      std::fprintf(f, "%s%.17g", j ? "," : "", gain.K(i, j));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

WacController read_wac_gain_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open gain file '" + path + "'");
  WacController wac;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string tag = "# buses:";
      if (t.rfind(tag, 0) == 0) {
        std::istringstream ss(t.substr(tag.size()));
        int b;
        while (ss >> b) wac.gen_buses.push_back(b);
      }
      continue;
    }
    const auto cells = split(t, ',');
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_field(c));
    rows.push_back(row);
  }
  if (rows.empty() || wac.gen_buses.empty())
    throw InputError("gain file '" + path + "' is missing data or the bus header");
  wac.K = Mat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw InputError("ragged gain matrix");
    for (size_t j = 0; j < rows[i].size(); ++j)
      wac.K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return wac;
}

void write_retrofit_gain_csv(const std::string& path, int bus, const Mat& K, bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "# retrofit gain, bus %d: inputs x states\n", bus);
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    for (Eigen::Index j = 0; j < K.cols(); ++j)
      std::fprintf(f, "%s%.17g", j ? "," : "", K(i, j));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

Mat read_retrofit_gain_csv(const std::string& path, int expect_bus) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open gain file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int bus = -1;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("bus ");
      if (pos != std::string::npos) bus = std::atoi(t.c_str() + pos + 4);
      continue;
    }
    const auto cells = split(t, ',');
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_field(c));
    rows.push_back(row);
  }
  if (bus >= 0 && expect_bus > 0 && bus != expect_bus)
    throw InputError("gain file '" + path + "' is for bus " + std::to_string(bus));
  if (rows.empty()) throw InputError("gain file '" + path + "' has no data");
  Mat K(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return K;
}

void write_pf_csv(const std::string& path, const PowerFlowSolution& pf, bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "bus,vmag,vang,p,q\n");
  for (Eigen::Index k = 0; k < pf.V_star.size(); ++k)
    std::fprintf(f, "%ld,%.15g,%.15g,%.15g,%.15g\n", static_cast<long>(k + 1),
                 std::abs(pf.V_star(k)), std::arg(pf.V_star(k)), pf.S_star(k).real(),
                 pf.S_star(k).imag());
  std::fclose(f);
}

void write_eigs_csv(const std::string& path, const std::vector<EigenInfo>& eigs, bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "re,im,damping,freq_hz\n");
  for (const auto& e : eigs)
    std::fprintf(f, "%.15g,%.15g,%.15g,%.15g\n", e.lambda.real(), e.lambda.imag(), e.damping,
                 e.freq_hz);
  std::fclose(f);
}

void write_sweep_csv(const std::string& path, const std::string& param, const SweepResult& sweep,
                     bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "param,max_re,crossed\n");
  std::fprintf(f, "# param: %s\n", param.c_str());
  for (const auto& pt : sweep.points) {
    if (pt.ok) {
      std::fprintf(f, "%.15g,%.15g,%d\n", pt.value, pt.max_re, pt.max_re > 0.0 ? 1 : 0);
    } else {
      std::fprintf(f, "%.15g,nan,0\n", pt.value);
    }
  }
  std::fclose(f);
}

void write_freqresp_csv(const std::string& path, const FrequencyResponse& fr, bool timestamp) {
  FILE* f = open_out(path);
  stamp(f, timestamp);
  std::fprintf(f, "omega_hz,sigma_max\n");
  for (size_t i = 0; i < fr.omega.size(); ++i)
    std::fprintf(f, "%.15g,%.15g\n", fr.omega[i] / (2.0 * kPi), fr.sigma_max[i]);
  std::fclose(f);
}

void write_trajectories(const std::string& out_dir, const SystemModel& sys, const Trajectory& tr,
                        bool timestamp) {
  std::filesystem::create_directories(out_dir);
  const int T = static_cast<int>(tr.times.size());

  auto write_family = [&](const std::string& name, const std::vector<std::string>& cols,
                          const std::function<double(int, int)>& value) {
    FILE* f = open_out(out_dir + "/traj_" + name + ".csv");
    stamp(f, timestamp);
    std::fprintf(f, "time");
    for (const auto& c : cols) std::fprintf(f, ",%s", c.c_str());
    std::fprintf(f, "\n");
    for (int t = 0; t < T; ++t) {
      std::fprintf(f, "%.15g", tr.times[static_cast<size_t>(t)]);
      for (size_t c = 0; c < cols.size(); ++c)
        std::fprintf(f, ",%.15g", value(static_cast<int>(c), t));
      std::fprintf(f, "\n");
    }
    std::fclose(f);
  };

  // generator frequency deviations
  std::vector<std::string> cols;
  std::vector<int> rows;
  for (size_t i = 0; i < tr.state_labels.size(); ++i)
    if (tr.state_labels[i].second == "domega") {
      cols.push_back("domega_b" + std::to_string(tr.state_labels[i].first));
      rows.push_back(static_cast<int>(i));
    }
  write_family("freq", cols, [&](int c, int t) { return tr.states(rows[static_cast<size_t>(c)], t); });

  // DER injected powers
  cols.clear();
  std::vector<std::pair<int, bool>> pq;  // (bus index, imag?)
  for (int b = 1; b <= sys.n_buses(); ++b) {
    const BusKind k = sys.network().kind(b);
    if (k == BusKind::Wind || k == BusKind::Solar || k == BusKind::Storage) {
      cols.push_back("P_b" + std::to_string(b));
      pq.push_back({b - 1, false});
      cols.push_back("Q_b" + std::to_string(b));
      pq.push_back({b - 1, true});
    }
  }
  write_family("der_power", cols, [&](int c, int t) {
    const Complex s = tr.injections(pq[static_cast<size_t>(c)].first, t);
    return pq[static_cast<size_t>(c)].second ? s.imag() : s.real();
  });

  // duty cycles and other auxiliary outputs
  cols.clear();
  for (const auto& [bus, name] : tr.aux_labels) cols.push_back(name + "_b" + std::to_string(bus));
  write_family("duty", cols, [&](int c, int t) { return tr.aux(c, t); });

  // battery voltages
  cols.clear();
  rows.clear();
  for (size_t i = 0; i < tr.state_labels.size(); ++i)
    if (tr.state_labels[i].second == "v_b") {
      cols.push_back("v_b_b" + std::to_string(tr.state_labels[i].first));
      rows.push_back(static_cast<int>(i));
    }
  write_family("battery", cols, [&](int c, int t) { return tr.states(rows[static_cast<size_t>(c)], t); });

  // controller inputs
  cols.clear();
  for (const auto& [bus, name] : tr.input_labels) cols.push_back(name + "_b" + std::to_string(bus));
  write_family("ctrl_input", cols, [&](int c, int t) { return tr.inputs(c, t); });

  // bus voltage magnitudes
  cols.clear();
  for (int b = 1; b <= sys.n_buses(); ++b) cols.push_back("vmag_b" + std::to_string(b));
  write_family("voltage", cols, [&](int c, int t) { return std::abs(tr.voltages(c, t)); });

  // rotor speeds of wind units
  cols.clear();
  rows.clear();
  for (size_t i = 0; i < tr.state_labels.size(); ++i)
    if (tr.state_labels[i].second == "omega_r") {
      cols.push_back("omega_r_b" + std::to_string(tr.state_labels[i].first));
      rows.push_back(static_cast<int>(i));
    }
  write_family("rotor_speed", cols,
               [&](int c, int t) { return tr.states(rows[static_cast<size_t>(c)], t); });

  FILE* g = open_out(out_dir + "/plot.gp");
  std::fprintf(g,
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'time (s)'\n"
               "plot for [i=2:*] 'traj_freq.csv' using 1:i with lines\n"
               "pause -1\n"
               "plot for [i=2:*] 'traj_der_power.csv' using 1:i with lines\n"
               "pause -1\n"
               "plot for [i=2:*] 'traj_duty.csv' using 1:i with lines\n"
               "pause -1\n");
  std::fclose(g);
}

}  // namespace gridkit::io
