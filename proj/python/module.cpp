#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridkit/io.hpp"
#include "gridkit/studies.hpp"

namespace py = pybind11;
using namespace gridkit;

namespace {

io::CaseData case_from_files(const std::string& branches, const std::string& buses,
                             const std::string& dispatch, const std::string& components,
                             int slack) {
  return io::read_case(branches, buses, dispatch, components, slack);
}

py::dict solve_pf(const io::CaseData& cd, double tol, int max_iter) {
  NetworkModel net(cd.n_buses, cd.kinds, cd.branches);
  const auto cons = assemble_constraints(net, cd.dispatch, cd.slack_bus);
  const auto pf = solve_power_flow(net, cons, {tol, max_iter});
  py::dict out;
  out["V"] = CVec(pf.V_star);
  out["S"] = CVec(pf.S_star);
  out["iterations"] = pf.iterations;
  out["max_mismatch"] = pf.max_mismatch;
  return out;
}

py::dict lin_case(const io::CaseData& cd) {
  SystemModel sys = io::build_system(cd);
  io::initialize_case(sys, cd);
  const Linearization lin = linearize(sys);
  py::dict out;
  out["A"] = Mat(lin.sys.A);
  out["B"] = Mat(lin.sys.B);
  py::list labels;
  for (const auto& [bus, name] : lin.sys.state_labels) labels.append(py::make_tuple(bus, name));
  out["state_labels"] = labels;
  out["dominant_re"] = dominant_real_part(lin.sys.A);
  return out;
}

py::dict sweep_case(const io::CaseData& cd, const std::string& param,
                    const std::vector<double>& values, int threads) {
  const SweepResult res = run_param_sweep(cd, param, values, threads);
  py::list pts;
  for (const auto& p : res.points) {
    py::dict d;
    d["value"] = p.value;
    d["max_re"] = p.max_re;
    d["ok"] = p.ok;
    if (!p.ok) d["error"] = p.error;
    pts.append(d);
  }
  py::dict out;
  out["points"] = pts;
  if (res.first_unstable) out["first_unstable"] = *res.first_unstable;
  return out;
}

py::dict simulate_scenario(const std::string& path) {
  const io::Scenario sc = io::read_scenario(path);
  const ScenarioRun run = run_scenario(sc);
  py::dict out;
  out["times"] = run.traj.times;
  out["states"] = Mat(run.traj.states);
  out["voltages"] = CMat(run.traj.voltages);
  out["injections"] = CMat(run.traj.injections);
  out["inputs"] = Mat(run.traj.inputs);
  py::list labels;
  for (const auto& [bus, name] : run.traj.state_labels) labels.append(py::make_tuple(bus, name));
  out["state_labels"] = labels;
  return out;
}

py::dict der_freqresp(const io::CaseData& cd, int bus, const std::vector<double>& omega) {
  SystemModel sys = io::build_system(cd);
  io::initialize_case(sys, cd);
  const auto ss = component_voltage_to_power_ss(sys.component(bus));
  const auto fr = frequency_response_sv(ss.A, ss.B, ss.C, ss.D, omega);
  py::dict out;
  out["omega"] = fr.omega;
  out["sigma_max"] = fr.sigma_max;
  out["peak_omega"] = fr.peak_omega;
  out["peak_value"] = fr.peak_value;
  return out;
}

}  // namespace

PYBIND11_MODULE(gridkit, m) {
  m.doc() = "power system dynamics, stability and control studies";

  py::class_<io::CaseData>(m, "CaseData");

  m.def("read_case", &case_from_files, py::arg("branches"), py::arg("buses"),
        py::arg("dispatch"), py::arg("components") = std::string(), py::arg("slack") = 0,
        "Load a study case from CSV/JSON files");
  m.def("build_admittance",
        [](const std::vector<std::tuple<int, int, double, double, double>>& branches, int n) {
          std::vector<BranchSpec> brs;
          for (const auto& [f, t, r, x, b] : branches) brs.push_back(BranchSpec::line(f, t, r, x, b));
          return CMat(build_admittance(brs, n));
        },
        py::arg("branches"), py::arg("n_buses"),
        "Admittance matrix from (from, to, r, x, b) tuples");
  m.def("network_mismatch",
        [](const CMat& Y, const CVec& V, const CVec& S) { return CVec(network_mismatch(Y, V, S)); },
        py::arg("Y"), py::arg("V"), py::arg("S"));
  m.def("solve_power_flow", &solve_pf, py::arg("case"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 50);
  m.def("linearize", &lin_case, py::arg("case"),
        "Power flow + initialization + Kron-reduced linearization");
  m.def("sweep", &sweep_case, py::arg("case"), py::arg("param"), py::arg("values"),
        py::arg("threads") = 0, "Dominant-eigenvalue parameter sweep");
  m.def("simulate", &simulate_scenario, py::arg("scenario_path"),
        "Integrate a scenario file and return the trajectories");
  m.def("frequency_response", &der_freqresp, py::arg("case"), py::arg("bus"), py::arg("omega"),
        "Voltage-to-power singular values of one DER");
  m.def("lqr",
        [](const Mat& A, const Mat& B, const Mat& W, const Mat& R) {
          auto [K, X] = lqr_gain(A, B, W, R);
          return py::make_tuple(Mat(K), Mat(X));
        },
        py::arg("A"), py::arg("B"), py::arg("W"), py::arg("R"),
        "Riccati-based state feedback (K, X)");
  m.def("structured_lqr",
        [](const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
           const std::vector<std::vector<int>>& groups, int n_blocks) {
          SparsityPattern p;
          p.n_blocks = n_blocks;
          p.groups = groups;
          const auto g = structured_lqr(A, B, Q, R, p);
          return py::make_tuple(Mat(g.K), g.J);
        },
        py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("groups"),
        py::arg("n_blocks"), "Group-sparse LQR gain and achieved cost");
}
