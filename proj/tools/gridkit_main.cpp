#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridkit/io.hpp"
#include "gridkit/studies.hpp"

using namespace gridkit;

namespace {

struct CaseArgs {
  std::string branches, buses, dispatch, components;
  int slack = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--branches", branches, "branch CSV (from,to,r,x,b)")->required();
    cmd->add_option("--buses", buses, "bus CSV (bus,kind)")->required();
    cmd->add_option("--dispatch", dispatch, "dispatch CSV (bus,p,q,vmag)")->required();
    cmd->add_option("--components", components, "component parameter JSON");
    cmd->add_option("--slack", slack, "slack bus (default: lowest generator bus)");
  }
  io::CaseData load() const { return io::read_case(branches, buses, dispatch, components, slack); }
};

std::vector<double> make_grid(double from, double to, double step) {
  if (step <= 0.0 || to < from) throw InputError("bad sweep grid");
  std::vector<double> v;
  for (double x = from; x <= to + 1e-9 * step; x += step) v.push_back(x);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power system dynamics, stability and control studies"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  unsigned long seed = 0;
  bool no_timestamp = false;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "seed for randomized utilities");
  app.add_flag("--no-timestamp", no_timestamp, "suppress the timestamp header line");

  PowerFlowOptions pf_opt;
  app.add_option("--pf-tol", pf_opt.tol, "power flow mismatch tolerance");
  app.add_option("--pf-maxiter", pf_opt.max_iter, "power flow iteration cap");

  // powerflow
  auto* cmd_pf = app.add_subcommand("powerflow", "solve the steady state and write pf.csv");
  CaseArgs pf_case;
  pf_case.attach(cmd_pf);

  // eigs
  auto* cmd_eigs = app.add_subcommand("eigs", "eigenvalues of the linearized system");
  CaseArgs eig_case;
  eig_case.attach(cmd_eigs);
  int eig_count = -1;
  cmd_eigs->add_option("--count", eig_count, "report only the top-k dominant eigenvalues");

  // sweep
  auto* cmd_sweep = app.add_subcommand("sweep", "dominant-eigenvalue parameter sweep");
  CaseArgs sweep_case;
  sweep_case.attach(cmd_sweep);
  std::string sweep_param;
  double sweep_from = 0, sweep_to = 0, sweep_step = 1;
  int sweep_threads = 0;
  cmd_sweep->add_option("--param", sweep_param, "gamma_pv | gamma_w | kappa_I_R")->required();
  cmd_sweep->add_option("--from", sweep_from)->required();
  cmd_sweep->add_option("--to", sweep_to)->required();
  cmd_sweep->add_option("--step", sweep_step)->required();
  cmd_sweep->add_option("--threads", sweep_threads, "worker threads (0: hardware)");

  // freqresp
  auto* cmd_fr = app.add_subcommand("freqresp",
                                    "voltage-to-power singular value response of one DER");
  CaseArgs fr_case;
  fr_case.attach(cmd_fr);
  int fr_bus = 0;
  double fr_fmin = 0.01, fr_fmax = 2.0;
  int fr_points = 200;
  cmd_fr->add_option("--bus", fr_bus, "DER bus")->required();
  cmd_fr->add_option("--fmin", fr_fmin, "lowest frequency (Hz)");
  cmd_fr->add_option("--fmax", fr_fmax, "highest frequency (Hz)");
  cmd_fr->add_option("--points", fr_points, "log-spaced grid size");

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "integrate a fault scenario");
  std::string scenario_path;
  cmd_sim->add_option("--scenario", scenario_path, "scenario file")->required();

  // design-retrofit
  auto* cmd_dr = app.add_subcommand("design-retrofit", "LQR retrofit gains for DER buses");
  CaseArgs dr_case;
  dr_case.attach(cmd_dr);
  std::vector<int> dr_buses;
  double dr_wcur = 10.0, dr_wstate = 1.0, dr_r = 1.0;
  cmd_dr->add_option("--bus", dr_buses, "DER buses (default: all wind/solar/storage)");
  cmd_dr->add_option("--w-current", dr_wcur, "state weight on current states");
  cmd_dr->add_option("--w-state", dr_wstate, "state weight elsewhere");
  cmd_dr->add_option("--r", dr_r, "input weight");

  // design-wac
  auto* cmd_dw = app.add_subcommand("design-wac", "group-sparse wide-area LQR gain");
  CaseArgs dw_case;
  dw_case.attach(cmd_dw);
  double dw_mu = 0.0, dw_qomega = 100.0, dw_qdelta = 1.0, dw_r = 1.0;
  cmd_dw->add_option("--mu", dw_mu, "residue threshold for generator grouping (0: dense)");
  cmd_dw->add_option("--q-omega", dw_qomega, "state weight on frequency deviations");
  cmd_dw->add_option("--q-delta", dw_qdelta, "state weight on rotor angles");
  cmd_dw->add_option("--r", dw_r, "input weight");

  CLI11_PARSE(app, argc, argv);
  const bool ts = !no_timestamp;

  try {
    if (cmd_pf->parsed()) {
      const io::CaseData cd = pf_case.load();
      NetworkModel net(cd.n_buses, cd.kinds, cd.branches);
      const auto cons = assemble_constraints(net, cd.dispatch, cd.slack_bus);
      const auto pf = solve_power_flow(net, cons, pf_opt);
      io::write_pf_csv(out_dir + "/pf.csv", pf, ts);
      std::printf("converged in %d iterations, mismatch %.3e\n", pf.iterations, pf.max_mismatch);
    } else if (cmd_eigs->parsed()) {
      const io::CaseData cd = eig_case.load();
      SystemModel sys = io::build_system(cd);
      io::initialize_case(sys, cd, pf_opt);
      const Linearization lin = linearize(sys);
      const auto eigs = eigen_report(lin.sys.A, eig_count);
      io::write_eigs_csv(out_dir + "/eigs.csv", eigs, ts);
      std::printf("%zu modes reported, dominant real part %.6f\n", eigs.size(),
                  dominant_real_part(lin.sys.A));
    } else if (cmd_sweep->parsed()) {
      const io::CaseData cd = sweep_case.load();
      const auto values = make_grid(sweep_from, sweep_to, sweep_step);
      const SweepResult res = run_param_sweep(cd, sweep_param, values, sweep_threads, pf_opt);
      io::write_sweep_csv(out_dir + "/sweep_" + sweep_param + ".csv", sweep_param, res, ts);
      if (res.first_unstable)
        std::printf("first unstable %s = %.6g\n", sweep_param.c_str(), *res.first_unstable);
      else
        std::printf("no crossing in [%g, %g]\n", sweep_from, sweep_to);
    } else if (cmd_fr->parsed()) {
      const io::CaseData cd = fr_case.load();
      SystemModel sys = io::build_system(cd);
      io::initialize_case(sys, cd, pf_opt);
      const auto ss = component_voltage_to_power_ss(sys.component(fr_bus));
      std::vector<double> grid;
      for (int i = 0; i < fr_points; ++i) {
        const double f =
            fr_fmin * std::pow(fr_fmax / fr_fmin, static_cast<double>(i) / (fr_points - 1));
        grid.push_back(2.0 * kPi * f);
      }
      const auto fr = frequency_response_sv(ss.A, ss.B, ss.C, ss.D, grid);
      io::write_freqresp_csv(out_dir + "/freqresp_bus" + std::to_string(fr_bus) + ".csv", fr, ts);
      std::printf("peak sigma %.6g at %.6g Hz\n", fr.peak_value, fr.peak_omega / (2.0 * kPi));
    } else if (cmd_sim->parsed()) {
      const io::Scenario sc = io::read_scenario(scenario_path);
      const ScenarioRun run = run_scenario(sc, pf_opt);
      io::write_trajectories(out_dir, run.sys, run.traj, ts);
      std::printf("simulated %.6g s, %zu samples\n", sc.t_end, run.traj.times.size());
    } else if (cmd_dr->parsed()) {
      const io::CaseData cd = dr_case.load();
      SystemModel sys = io::build_system(cd);
      io::initialize_case(sys, cd, pf_opt);
      std::vector<int> buses = dr_buses;
      if (buses.empty()) {
        for (BusKind k : {BusKind::Wind, BusKind::Solar, BusKind::Storage})
          for (int b : sys.network().buses_of_kind(k)) buses.push_back(b);
        std::sort(buses.begin(), buses.end());
      }
      RetrofitWeights w{dr_wstate, dr_wcur, dr_r};
      for (int b : buses) {
        const RetrofitController c = make_retrofit(sys.component(b), b, std::nullopt, w);
        const std::string path = out_dir + "/retrofit_gain_bus" + std::to_string(b) + ".csv";
        io::write_retrofit_gain_csv(path, b, c.K(), ts);
        std::printf("bus %d: gain %ldx%ld written to %s\n", b, static_cast<long>(c.K().rows()),
                    static_cast<long>(c.K().cols()), path.c_str());
      }
    } else if (cmd_dw->parsed()) {
      const io::CaseData cd = dw_case.load();
      SystemModel sys = io::build_system(cd);
      io::initialize_case(sys, cd, pf_opt);
      const Linearization lin = linearize(sys);
      const GeneratorDesignModel gd = generator_design_model(lin.sys, sys.network());
      const int ng = static_cast<int>(gd.gen_buses.size());

      SparsityPattern pattern = SparsityPattern::all_allowed(ng);
      if (dw_mu > 0.0) {
        // grouping from the modal residues of the generator frequency deviations
        const int n = static_cast<int>(lin.sys.A.rows());
        Mat C = Mat::Zero(ng, n);
        Vec x0 = Vec::Zero(n);
        for (int i = 0; i < ng; ++i) {
          const int off = lin.sys.bus_state_offset(gd.gen_buses[static_cast<size_t>(i)]);
          C(i, off + 1) = 1.0;
          x0(off + 1) = 1.0;
        }
        pattern = build_groups(modal_residues(lin.sys.A, C, x0), dw_mu);
      }

      Mat Q = 1e-6 * Mat::Identity(gd.A.rows(), gd.A.cols());
      for (int i = 0; i < ng; ++i) {
        Q(7 * i, 7 * i) = dw_qdelta;
        Q(7 * i + 1, 7 * i + 1) = dw_qomega;
      }
      const Mat R = dw_r * Mat::Identity(ng, ng);
      WideAreaGain gain = structured_lqr(gd.A, gd.B, Q, R, pattern);
      gain.gen_buses = gd.gen_buses;
      io::write_wac_gain_csv(out_dir + "/wac_gain.csv", gain, ts);
      const double dom = dominant_real_part(closed_loop_wac(lin.sys, sys.network(),
                                                            {gain.K, gain.gen_buses}));
      std::printf("gain written, cost %.6g, closed-loop dominant real part %.6f\n", gain.J, dom);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const NoConvergenceError& e) {
    std::fprintf(stderr, "no convergence: %s (residual %.3e)\n", e.what(), e.final_residual);
    return 3;
  } catch (const SimulationDivergedError& e) {
    std::fprintf(stderr, "simulation diverged at t = %.6g s: %s\n", e.time, e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
