#include "cavopt/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cavopt {

const char* to_string(VehicleStatus s) {
  switch (s) {
    case VehicleStatus::Solved: return "solved";
    case VehicleStatus::Infeasible: return "infeasible";
    case VehicleStatus::Skipped: return "skipped";
  }
  return "?";
}

bool VariantOutcome::all_solved() const {
  return std::all_of(vehicles.begin(), vehicles.end(),
                     [](const auto& v) { return v.status == VehicleStatus::Solved; });
}

bool VariantOutcome::audits_passed() const {
  if (!guarantees.passed()) return false;
  for (const auto& v : vehicles)
    if (v.status == VehicleStatus::Solved && !v.audit.passed()) return false;
  return true;
}

int SimulationResult::exit_code() const {
  for (const auto& v : variants)
    if (!v.all_solved() || !v.audits_passed()) return 2;
  return 0;
}

namespace {

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

VariantOutcome run_variant(const Variant& variant, const Scenario& sc) {
  const ScenarioConfig& cfg = sc.config;
  VariantOutcome out;
  out.name = variant.name;
  Queue queue(cfg.rng_seed);
  queue.enqueue_all(variant.arrivals);
  std::vector<SolvedVehicle> solved;

  for (const auto& arrival : queue.entries()) {
    VehicleOutcome vo;
    vo.arrival = arrival;
    vo.queue_index = queue.index_of(arrival.id);
    const QueueView view = queue.classify(arrival.id, cfg.conflict);
    for (const auto* p : {&view.k, &view.c, &view.o})
      if (*p && !(*p)->traj) {
        vo.status = VehicleStatus::Skipped;
        vo.message = "predecessor " + std::to_string((*p)->id) + " has no trajectory";
      }
    if (!vo.message.empty()) {
      out.vehicles.push_back(std::move(vo));
      continue;
    }

    const auto start = std::chrono::steady_clock::now();
    SolveResult res = algorithm1(arrival, view, cfg);
    vo.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    vo.report = std::move(res.report);
    if (!vo.report.feasible) {
      vo.status = VehicleStatus::Infeasible;
      vo.message = vo.report.message;
      out.vehicles.push_back(std::move(vo));
      continue;
    }
    vo.status = VehicleStatus::Solved;
    vo.traj = std::move(res.traj);
    const ScenarioConfig eff = effective_config(cfg, arrival);
    AuditOptions opt;
    opt.free_tf = std::holds_alternative<FreeTime>(vo.report.mode);
    opt.v0 = arrival.v0;
    vo.audit = audit(vo.traj, view, eff, opt);
    if (sc.run.oracle) {
      OracleOptions oo;
      oo.seed = sc.run.seed;
      std::optional<double> tf;
      if (std::holds_alternative<FixedTime>(vo.report.mode)) tf = vo.traj.tf();
      const auto o = transcription_oracle(arrival.t0, arrival.v0, tf, view, eff, oo);
      const double J = vo.report.cost.J;
      vo.audit.oracle = OracleComparison{J, o.J, (J - o.J) / o.J};
    }
    queue.set_solution(arrival.id, vo.traj);
    solved.push_back({arrival, vo.traj});
    out.vehicles.push_back(std::move(vo));
  }
  out.guarantees = check_guarantees(solved, cfg);
  return out;
}

std::string join(const std::vector<ConstraintKind>& ks) {
  std::string s;
  for (auto k : ks) s += (s.empty() ? "" : ";") + std::string(to_string(k));
  return s.empty() ? "none" : s;
}

}  // namespace

SimulationResult simulate(const Scenario& scenario) {
  scenario.config.validate();
  SimulationResult r;
  for (const auto& v : scenario.variants) r.variants.push_back(run_variant(v, scenario));
  return r;
}

std::string summary_csv(const SimulationResult& r) {
  std::ostringstream os;
  os << "variant,cav_id,queue_index,t0,v0,tf,travel_time,energy,cost,active_constraints,"
        "binding_bound,structure,junctions,status\n";
  for (const auto& var : r.variants)
    for (const auto& v : var.vehicles) {
      os << var.name << "," << v.arrival.id << "," << v.queue_index << "," << fmt(v.arrival.t0)
         << "," << fmt(v.arrival.v0) << ",";
      if (v.status == VehicleStatus::Solved) {
        const Cost& c = v.report.cost;
        std::string junctions;
        for (double t : v.traj.breakpoints())
          junctions += (junctions.empty() ? "" : ";") + fmt(t);
        os << fmt(v.traj.tf()) << "," << fmt(c.T) << "," << fmt(c.E) << "," << fmt(c.J) << ","
           << join(v.report.active) << "," << to_string(v.report.bounds.binding_term) << ","
           << v.report.structure << "," << (junctions.empty() ? "none" : junctions) << ",";
      } else {
        os << ",,,,,,,,";
      }
      os << to_string(v.status) << "\n";
    }
  return os.str();
}

std::string trajectories_csv(const VariantOutcome& var, double step) {
  std::ostringstream os;
  os << "t,p,v,u,arc_kind,cav_id\n";
  for (const auto& v : var.vehicles) {
    if (v.status != VehicleStatus::Solved) continue;
    const auto& tr = v.traj;
    std::vector<double> ts;
    for (double t = tr.t0(); t < tr.tf(); t += step) ts.push_back(t);
    for (double t : tr.breakpoints()) ts.push_back(t);
    ts.push_back(tr.tf());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
             ts.end());
    for (double t : ts) {
      t = std::min(t, tr.tf());
      const State s = tr.eval(t);
      const ArcSegment* arc = &tr.arcs().back();
      for (const auto& a : tr.arcs())
        if (t < a.t_end()) {
          arc = &a;
          break;
        }
      os << fmt(t) << "," << fmt(s.p, 9) << "," << fmt(s.v, 9) << "," << fmt(s.u, 9) << ","
         << to_string(arc->kind()) << "," << v.arrival.id << "\n";
    }
  }
  return os.str();
}

std::string audit_text(const SimulationResult& r) {
  std::ostringstream os;
  for (const auto& var : r.variants) {
    os << "== variant " << var.name << "\n";
    for (const auto& v : var.vehicles) {
      os << "-- cav " << v.arrival.id << " (queue " << v.queue_index << "): "
         << to_string(v.status);
      if (!v.message.empty()) os << " - " << v.message;
      os << "\n";
      for (const auto& h : v.report.history) os << "   " << h << "\n";
      if (v.status != VehicleStatus::Solved) continue;
      os << "   structure " << v.report.structure << ", terminal mode "
         << describe(v.report.mode) << ", residual " << v.report.residual << "\n";
      os << v.audit.to_text();
    }
    os << "-- pairwise guarantees: " << var.guarantees.pairs_checked << " pairs, "
       << (var.guarantees.passed() ? "PASS" : "FAIL") << "\n";
    for (const auto& g : var.guarantees.violations)
      os << "   " << g.check << " leader " << g.leader << " follower " << g.follower << " at t="
         << g.t << " margin " << g.margin << "\n";
  }
  return os.str();
}

void write_outputs(const SimulationResult& r, const Scenario& s, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
    f << body;
    if (!f) throw ConfigError("write failed for " + name);
  };
  write("summary.csv", summary_csv(r));
  write("audit.txt", audit_text(r));
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const std::string name =
        i == 0 ? "trajectories.csv" : "trajectories_" + r.variants[i].name + ".csv";
    write(name, trajectories_csv(r.variants[i], s.run.sample_step));
  }
}

}  // namespace cavopt
