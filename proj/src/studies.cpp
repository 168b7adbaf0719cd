#include "gridkit/studies.hpp"

#include <json.hpp>

namespace gridkit {

using nlohmann::json;

void apply_sweep_parameter(io::CaseData& cd, const std::string& param, double value) {
  json recs = cd.components_json.empty() ? json::array() : json::parse(cd.components_json);
  auto record_for = [&](int bus) -> json& {
    for (auto& r : recs)
      if (r.at("bus").get<int>() == bus) return r;
    recs.push_back(json{{"bus", bus}});
    return recs.back();
  };
  auto redispatch = [&](int bus, double p) {
    for (auto& d : cd.dispatch)
      if (d.bus == bus) {
        d.p = p;
        return;
      }
    DispatchEntry d;
    d.bus = bus;
    d.p = p;
    d.vmag = 1.0;
    cd.dispatch.push_back(d);
  };

  bool matched = false;
  for (int b = 1; b <= cd.n_buses; ++b) {
    const BusKind k = cd.kinds[static_cast<size_t>(b - 1)];
    if (param == "gamma_pv" && k == BusKind::Solar) {
      record_for(b)["gamma"] = value;
      redispatch(b, 0.02 * value);
      matched = true;
    } else if (param == "gamma_w" && k == BusKind::Wind) {
      record_for(b)["gamma"] = value;
      redispatch(b, 0.02 * value);
      matched = true;
    } else if (param == "kappa_I_R" && k == BusKind::Wind) {
      record_for(b)["kappa_I_dR"] = value;
      record_for(b)["kappa_I_qR"] = value;
      matched = true;
    }
  }
  if (!matched)
    throw InputError("sweep parameter '" + param + "' matches no bus in the case");
  cd.components_json = recs.dump();
}

SweepResult run_param_sweep(const io::CaseData& base, const std::string& param,
                            const std::vector<double>& values, int n_threads,
                            const PowerFlowOptions& pf_opt) {
  auto dominant = [&, base](double value) {
    io::CaseData cd = base;
    apply_sweep_parameter(cd, param, value);
    SystemModel sys = io::build_system(cd);
    io::initialize_case(sys, cd, pf_opt);
    const Linearization lin = linearize(sys);
    return dominant_real_part(lin.sys.A);
  };
  return stability_sweep(dominant, values, n_threads);
}

ScenarioRun run_scenario(const io::Scenario& sc, const PowerFlowOptions& pf_opt,
                         SimOptions sim_opt) {
  SystemModel sys = io::build_system(sc.case_data);
  const PowerFlowSolution pf = io::initialize_case(sys, sc.case_data, pf_opt);

  std::vector<RetrofitController> retros;
  for (const auto& req : sc.retrofits) {
    std::optional<Mat> K;
    if (!req.gain_csv.empty()) K = io::read_retrofit_gain_csv(req.gain_csv, req.bus);
    retros.push_back(make_retrofit(sys.component(req.bus), req.bus, K, req.weights));
  }
  std::optional<WacController> wac;
  if (!sc.wac_gain_csv.empty()) wac = io::read_wac_gain_csv(sc.wac_gain_csv);

  sim_opt.dt = sc.dt;
  Trajectory traj = simulate(sys, sc.faults, std::move(retros), wac, sc.t_end, sim_opt);
  return {std::move(sys), pf, std::move(traj)};
}

}  // namespace gridkit
