#include "revflow/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "revflow/analysis.hpp"
#include "revflow/billiard.hpp"
#include "revflow/carleman.hpp"
#include "revflow/geodesic.hpp"
#include "revflow/parallel.hpp"
#include "revflow/period.hpp"
#include "revflow/surface.hpp"

namespace revflow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Surface load_surface(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open surface file '" + path + "'");
    nlohmann::json doc;
    in >> doc;
    return surface_from_json(doc);
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("REVFLOW_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 1;
}

struct PointSpec {
    std::optional<double> alpha;
    std::optional<double> phi0;
    int direction = 1;
    std::optional<double> theta, phi, p_theta, p_phi;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "equator angle alpha in [0, pi/2)");
        cmd->add_option("--phi0", phi0, "azimuth of the equator crossing");
        cmd->add_option("--direction", direction, "sign of p_theta at the crossing");
        cmd->add_option("--theta", theta, "raw phase point: theta");
        cmd->add_option("--phi", phi, "raw phase point: phi");
        cmd->add_option("--p-theta", p_theta, "raw phase point: p_theta");
        cmd->add_option("--p-phi", p_phi, "raw phase point: p_phi");
    }

    PhasePoint resolve(const Surface& surface, double default_phi0 = 0.0) const {
        if (alpha)
            return equator_to_phase(surface,
                                    {*alpha, phi0.value_or(default_phi0), direction});
        if (theta && phi && p_theta && p_phi)
            return PhasePoint{*theta, *phi, *p_theta, *p_phi};
        throw std::runtime_error(
            "initial point: give --alpha (plus optional --phi0/--direction) or "
            "all of --theta --phi --p-theta --p-phi");
    }
};

std::ostream& open_sink(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
    return file;
}

nlohmann::json event_to_json(const TrajectoryEvent& ev) {
    return {{"kind", to_string(ev.kind)},
            {"t", ev.t},
            {"theta", ev.state.theta},
            {"phi", ev.state.phi},
            {"p_theta", ev.state.p_theta},
            {"p_phi", ev.state.p_phi},
            {"direction", ev.direction},
            {"arc", ev.arc_index}};
}

void write_events_json(const std::string& path, const nlohmann::json& config,
                       const Trajectory& traj) {
    if (path.empty()) return;
    nlohmann::json j;
    j["config"] = config;
    j["events"] = nlohmann::json::array();
    for (const auto& ev : traj.events) j["events"].push_back(event_to_json(ev));
    j["drift"] = {{"max_energy", traj.max_energy_drift},
                  {"max_clairaut", traj.max_clairaut_drift}};
    j["domain_exit"] = traj.domain_exit;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open events file '" + path + "'");
    out << j.dump(2) << "\n";
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    if (count == 1) {
        out.push_back(0.5 * (lo + hi));
        return out;
    }
    for (int i = 0; i < count; ++i)
        out.push_back(lo + (hi - lo) * i / (count - 1));
    return out;
}

// Uniform grid of `count` points strictly inside (lo, hi) (midpoint rule).
std::vector<double> interior_grid(double lo, double hi, int count) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i)
        out.push_back(lo + (hi - lo) * (i + 0.5) / count);
    return out;
}

// ---------------------------------------------------------------------------
// surface validate
// ---------------------------------------------------------------------------

int cmd_surface_validate(const std::string& path, double tol) {
    nlohmann::json report;
    report["file"] = path;
    report["tol"] = tol;
    try {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open surface file '" + path + "'");
        nlohmann::json doc;
        in >> doc;
        const Profile profile = Profile::from_json(doc);
        const double theta_max = doc.value("theta_max", kDefaultThetaMax);
        const int grid_n = doc.value("grid_n", 10000);
        const Surface s = build_surface(profile, grid_n, tol, theta_max);
        report["valid"] = true;
        report["profile"] = s.profile().describe();
        report["grid_n"] = s.validation().grid_n;
        report["min_margin"] = s.validation().min_margin;
        report["worst_theta"] = s.validation().worst_theta;
        report["theta_max"] = s.theta_max();
        std::cout << report.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        report["valid"] = false;
        report["error"] = e.what();
        std::cout << report.dump(2) << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// trace / billiard
// ---------------------------------------------------------------------------

struct TraceArgs {
    std::string surface_path;
    PointSpec point;
    double t_end = kTwoPi;
    double tol = 1e-10;
    int samples = 256;
    std::string out;
    std::string events_out;
    int max_reflections = 1000000;  // billiard only
};

std::vector<double> sample_times_for(double t_end, int samples) {
    std::vector<double> times;
    if (t_end == 0.0 || samples <= 0) return times;
    times.reserve(static_cast<std::size_t>(samples));
    for (int i = 1; i <= samples; ++i)
        times.push_back(t_end * static_cast<double>(i) / samples);
    return times;
}

int cmd_trace(const TraceArgs& a) {
    const Surface surface = load_surface(a.surface_path);
    const PhasePoint p0 = a.point.resolve(surface);

    FlowOptions opt;
    opt.tol = a.tol;
    opt.record_steps = false;
    opt.sample_times = sample_times_for(a.t_end, a.samples);
    const Trajectory traj = flow(surface, p0, a.t_end, opt);

    std::ofstream file;
    std::ostream& os = open_sink(file, a.out);
    os << "# revflow trace\n";
    os << "# surface=" << a.surface_path << "\n";
    os << "# tol=" << fmt(a.tol) << " t_end=" << fmt(a.t_end)
       << " samples=" << a.samples << "\n";
    os << "t,theta,phi,p_theta,p_phi\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const PhasePoint& p = traj.states[i];
        os << fmt(traj.times[i]) << ',' << fmt(p.theta) << ',' << fmt(p.phi) << ','
           << fmt(p.p_theta) << ',' << fmt(p.p_phi) << "\n";
    }

    nlohmann::json config = {{"surface", a.surface_path},
                             {"tol", a.tol},
                             {"t_end", a.t_end},
                             {"samples", a.samples}};
    write_events_json(a.events_out, config, traj);
    return 0;
}

int cmd_billiard(const TraceArgs& a) {
    const Surface surface = load_surface(a.surface_path);
    HalfSurface half{surface};
    // Equator starts default to the middle of the domain; an explicit wall
    // azimuth is rejected downstream as a non-interior start.
    const PhasePoint p0 = a.point.resolve(surface, 0.5 * kPi);

    BilliardOptions opt;
    opt.flow.tol = a.tol;
    opt.flow.record_steps = false;
    opt.flow.sample_times = sample_times_for(a.t_end, a.samples);
    opt.max_reflections = a.max_reflections;
    const BilliardTrajectory bt = billiard_flow(half, p0, a.t_end, opt);

    std::ofstream file;
    std::ostream& os = open_sink(file, a.out);
    os << "# revflow billiard\n";
    os << "# surface=" << a.surface_path << "\n";
    os << "# tol=" << fmt(a.tol) << " t_end=" << fmt(a.t_end)
       << " samples=" << a.samples << " max_reflections=" << a.max_reflections
       << "\n";
    os << "t,arc,theta,phi,p_theta,p_phi\n";
    for (std::size_t i = 0; i < bt.path.times.size(); ++i) {
        const PhasePoint& p = bt.path.states[i];
        os << fmt(bt.path.times[i]) << ',' << bt.arc_of_sample[i] << ','
           << fmt(p.theta) << ',' << fmt(p.phi) << ',' << fmt(p.p_theta) << ','
           << fmt(p.p_phi) << "\n";
    }

    nlohmann::json config = {{"surface", a.surface_path},
                             {"tol", a.tol},
                             {"t_end", a.t_end},
                             {"samples", a.samples},
                             {"max_reflections", a.max_reflections}};
    write_events_json(a.events_out, config, bt.path);
    if (bt.grazing) {
        std::cerr << "warning: trajectory grazed the wall and was halted\n";
    }
    if (bt.reflection_cap_hit) {
        std::cerr << "warning: reflection cap hit (possible dead end)\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// period-scan / classify
// ---------------------------------------------------------------------------

const char* classification_label(const PeriodRecord& rec) {
    if (!rec.ok()) return "error";
    return to_string(rec.resonance.type);
}

int cmd_period_scan(const std::string& surface_path, double alpha_min,
                    double alpha_max, int count, double tol, int k_max, int jobs,
                    const std::string& out) {
    const Surface surface = load_surface(surface_path);
    const std::vector<double> grid = linspace(alpha_min, alpha_max, count);
    const std::vector<PeriodRecord> rows = scan(surface, grid, tol, k_max, jobs);

    std::ofstream file;
    std::ostream& os = open_sink(file, out);
    os << "# revflow period-scan\n";
    os << "# surface=" << surface_path << "\n";
    os << "# tol=" << fmt(tol) << " k_max=" << k_max << " count=" << count
       << " alpha_min=" << fmt(alpha_min) << " alpha_max=" << fmt(alpha_max)
       << "\n";
    os << "alpha,T_star,R,rot_frac_p,rot_frac_q,classification\n";
    for (const PeriodRecord& r : rows) {
        os << fmt(r.alpha) << ',' << fmt(r.t_star) << ',' << fmt(r.rotation) << ','
           << r.resonance.p << ',' << r.resonance.q << ','
           << classification_label(r) << "\n";
    }
    return 0;
}

int cmd_classify(const std::string& surface_path, double alpha, double tol,
                 int k_max) {
    const Surface surface = load_surface(surface_path);
    const PeriodRecord rec = classify_alpha(surface, alpha, tol, k_max);
    nlohmann::json j = {{"alpha", rec.alpha},
                        {"tol", tol},
                        {"k_max", k_max},
                        {"T_star", rec.t_star},
                        {"R", rec.rotation},
                        {"classification", classification_label(rec)},
                        {"rot_frac_p", rec.resonance.p},
                        {"rot_frac_q", rec.resonance.q},
                        {"rot_frac_error", rec.resonance.fraction_error},
                        {"full_period", rec.resonance.full_period}};
    if (!rec.ok()) j["error"] = rec.error;
    std::cout << j.dump(2) << "\n";
    return rec.ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// jet / return-time / measure / curvature / carleman
// ---------------------------------------------------------------------------

int cmd_jet(const std::string& surface_path, const PointSpec& point, double T,
            int order, double fd_step, double tol, double jet_tol,
            std::uint64_t seed) {
    const Surface surface = load_surface(surface_path);
    const PhasePoint p0 = point.resolve(surface);
    const JetReport rep = jet_norms(surface, p0, T, order, fd_step, tol, jet_tol);

    nlohmann::json j;
    j["config"] = {{"surface", surface_path}, {"T", T},     {"order", order},
                   {"fd_step", fd_step},      {"tol", tol}, {"jet_tol", jet_tol},
                   {"seed", seed}};
    j["base"] = {{"theta", rep.base.theta},
                 {"phi", rep.base.phi},
                 {"p_theta", rep.base.p_theta},
                 {"p_phi", rep.base.p_phi}};
    j["max_by_order"] = rep.max_by_order;
    j["max_by_order_half_step"] = rep.max_by_order_half_step;
    j["phi_invariance_dev"] = rep.phi_invariance_dev;
    j["absolutely_periodic_to_order"] = rep.absolutely_periodic ? order : -1;
    j["first_nonvanishing_order"] = rep.first_nonvanishing_order;
    j["first_nonvanishing_magnitude"] = rep.first_nonvanishing_magnitude;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_return_time(const std::string& surface_path, const PointSpec& point,
                    double t_guess, double radius, double tol, double fd_step,
                    std::uint64_t seed) {
    const Surface surface = load_surface(surface_path);
    const PhasePoint p0 = point.resolve(surface);
    const ReturnTime rt = return_time(surface, p0, t_guess, radius, tol, fd_step);
    nlohmann::json j;
    j["config"] = {{"surface", surface_path},
                   {"t_guess", t_guess},
                   {"radius", radius},
                   {"tol", tol},
                   {"fd_step", fd_step},
                   {"seed", seed}};
    j["t_star"] = rt.t_star;
    j["displacement_at_min"] = rt.displacement_at_min;
    j["gradient"] = rt.gradient;
    j["gradient_norm"] = rt.gradient_norm;
    std::cout << j.dump(2) << "\n";
    return 0;
}

nlohmann::json measure_to_json(const MeasureReport& rep) {
    auto wil = [](const WilsonInterval& w) {
        return nlohmann::json{{"fraction", w.fraction}, {"lo", w.lo}, {"hi", w.hi}};
    };
    return {{"n", rep.n},
            {"T", rep.T},
            {"tol", rep.tol},
            {"k_max", rep.k_max},
            {"seed", rep.seed},
            {"n_periodic", rep.n_periodic},
            {"n_nonperiodic", rep.n_nonperiodic},
            {"n_unresolved", rep.n_unresolved},
            {"n_band", rep.n_band},
            {"n_t_periodic", rep.n_t_periodic},
            {"periodic", wil(rep.periodic)},
            {"nonperiodic", wil(rep.nonperiodic)},
            {"t_periodic", wil(rep.t_periodic)},
            {"band_fraction", rep.band_fraction}};
}

int cmd_measure(const std::string& surface_path, double T, int n, double tol,
                int k_max, std::uint64_t seed, int jobs) {
    const Surface surface = load_surface(surface_path);
    const MeasureReport rep = estimate_measure(surface, T, n, tol, k_max, seed, jobs);
    nlohmann::json j = measure_to_json(rep);
    j["config"] = {{"surface", surface_path}, {"T", T},       {"n", n},
                   {"tol", tol},              {"k_max", k_max}, {"seed", seed}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_curvature(const std::string& surface_path, int count, double fd_step,
                  const std::string& out) {
    const Surface surface = load_surface(surface_path);
    HalfSurface half{surface};

    std::ofstream file;
    std::ostream& os = open_sink(file, out);
    os << "# revflow curvature\n";
    os << "# surface=" << surface_path << "\n";
    os << "# fd_step=" << fmt(fd_step) << " count=" << count << "\n";
    os << "theta,xi_prime,kappa\n";

    const double span = 0.8 * surface.theta_max();
    const std::vector<double> thetas = linspace(-span, span, count);
    const double xi_choices[3] = {0.5, 1.0, 1.7};
    for (int i = 0; i < count; ++i) {
        const double xi = xi_choices[i % 3];
        const double wall =
            (i % 2 == 0) ? HalfSurface::wall_low : HalfSurface::wall_high;
        const CurvatureResult res =
            hamiltonian_curvature(half, thetas[static_cast<std::size_t>(i)], xi,
                                  fd_step, wall);
        os << fmt(thetas[static_cast<std::size_t>(i)]) << ',' << fmt(xi) << ','
           << fmt(res.kappa) << "\n";
    }
    return 0;
}

int cmd_carleman(const std::string& kind, double s,
                 const std::vector<double>& values, int n_max, double tol) {
    CarlemanSequence seq = [&] {
        if (kind == "factorial") return CarlemanSequence::factorial();
        if (kind == "gevrey") return CarlemanSequence::gevrey(s);
        if (kind == "explicit") return CarlemanSequence::explicit_values(values);
        throw std::runtime_error("unknown sequence kind '" + kind +
                                 "' (factorial|gevrey|explicit)");
    }();

    nlohmann::json j;
    j["config"] = {{"kind", kind}, {"N", n_max}, {"tol", tol}};
    if (kind == "gevrey") j["config"]["s"] = s;

    const RegularityReport rep = check_regularity(seq, n_max, tol);
    j["regularity"] = {{"growth_ok", rep.growth_ok},
                       {"convexity_min_second_difference",
                        rep.convexity_min_second_difference},
                       {"checked_up_to", rep.checked_up_to},
                       {"all_pass", rep.all_pass(tol)}};
    if (rep.ratio_constant) j["regularity"]["ratio_constant"] = *rep.ratio_constant;

    if (n_max >= 16) {
        nlohmann::json sums = nlohmann::json::array();
        for (const auto& [k, sk] : quasianalyticity_partial_sums(seq, n_max))
            sums.push_back({{"k", k}, {"S_k", sk}});
        j["partial_sums"] = sums;
    }
    j["classification"] = to_string(classify(seq));
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// repro: packaged experiments
// ---------------------------------------------------------------------------

struct Summary {
    int failures = 0;

    void check(bool ok, const std::string& label, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << " (" << detail
                  << ")\n";
        if (!ok) ++failures;
    }
};

Surface packaged_bump_surface() {
    return build_surface(Profile::bump(0.5, 1.0, 0.1));
}

double billiard_return_sq(const BilliardTrajectory& bt, const PhasePoint& p0) {
    const PhasePoint& e = bt.path.states.back();
    const double dtheta = e.theta - p0.theta;
    const double dphi = e.phi - p0.phi;
    const double dpt = e.p_theta - p0.p_theta;
    const double dpp = e.p_phi - p0.p_phi;
    return dtheta * dtheta + dphi * dphi + dpt * dpt + dpp * dpp;
}

int cmd_repro_thm47(std::uint64_t seed, int jobs) {
    const Surface surface = packaged_bump_surface();
    Summary sum;
    std::cout << "# repro thm47: bump surface, seed=" << seed << ", jobs=" << jobs
              << "\n";

    // Absolutely periodic band: displacement and jets on samples with
    // alpha < 0.5.
    const int n_band = 200;
    std::vector<PhasePoint> band_points;
    {
        const auto samples = sample_liouville(surface, 20000, seed);
        for (const PhasePoint& p : samples) {
            const double alpha = std::acos(std::clamp(std::abs(p.p_phi), 0.0, 1.0));
            if (alpha < 0.5) band_points.push_back(p);
            if (static_cast<int>(band_points.size()) == n_band) break;
        }
    }
    std::vector<double> d_values(band_points.size());
    std::vector<int> jet_bad(band_points.size(), 0);
    parallel_for(static_cast<int>(band_points.size()), jobs, [&](int i) {
        const PhasePoint& p = band_points[static_cast<std::size_t>(i)];
        d_values[static_cast<std::size_t>(i)] = displacement(surface, p, kTwoPi, 1e-10);
        const JetReport rep = jet_norms(surface, p, kTwoPi, 3, 1e-3, 1e-10, 1e-6);
        jet_bad[static_cast<std::size_t>(i)] = rep.absolutely_periodic ? 0 : 1;
    });
    double d_max = 0.0;
    int bad = 0;
    for (std::size_t i = 0; i < band_points.size(); ++i) {
        d_max = std::max(d_max, d_values[i]);
        bad += jet_bad[i];
    }
    sum.check(static_cast<int>(band_points.size()) == n_band && d_max <= 1e-8,
              "band displacement D(2pi) <= 1e-8 on 200 samples with alpha < 0.5",
              "max D = " + fmt(d_max));
    sum.check(bad == 0, "band jets to order 3 <= 1e-6 on the same samples",
              std::to_string(bad) + " failures");

    // Resonance scan above the band edge.
    const std::vector<PeriodRecord> rows =
        scan(surface, interior_grid(0.55, 1.2, 200), 1e-8, 20, jobs);
    int resonant = 0;
    int errors = 0;
    for (const PeriodRecord& r : rows) {
        if (!r.ok()) ++errors;
        else if (r.resonance.type == OrbitClass::PeriodicResonant) ++resonant;
    }
    sum.check(errors == 0 && resonant <= 10,
              "<= 5% PeriodicResonant on a 200-point grid in (0.55, 1.2)",
              std::to_string(resonant) + " resonant rows");

    // Measure estimate: both fractions positive with confidence.
    const MeasureReport rep = estimate_measure(surface, kTwoPi, 10000, 1e-8, 20,
                                               seed, jobs);
    sum.check(rep.t_periodic.lo > 0.0 && rep.band_fraction > 0.0,
              "periodic band has positive measure",
              "T-periodic fraction = " + fmt(rep.t_periodic.fraction) +
                  ", band = " + fmt(rep.band_fraction));
    sum.check(rep.nonperiodic.lo >= 0.05,
              "nonperiodic fraction >= 0.05 at 95% confidence",
              "lo = " + fmt(rep.nonperiodic.lo));

    std::cout << (sum.failures == 0 ? "thm47: ALL PASS\n" : "thm47: FAILURES\n");
    return sum.failures == 0 ? 0 : 1;
}

int cmd_repro_thm48(std::uint64_t seed, int jobs) {
    const Surface surface = packaged_bump_surface();
    const HalfSurface half{surface};
    Summary sum;
    std::cout << "# repro thm48: bump half-surface, seed=" << seed
              << ", jobs=" << jobs << "\n";

    // Interior non-grazing starts.
    auto interior_starts = [&](int want, std::uint64_t s) {
        std::vector<PhasePoint> out;
        for (const PhasePoint& p : sample_liouville(surface, want * 8, s)) {
            PhasePoint q = p;
            q.phi = 0.1 + 0.8 * kPi * std::fmod(std::abs(p.phi), 1.0);
            const double alpha = std::acos(std::clamp(std::abs(q.p_phi), 0.0, 1.0));
            if (std::abs(q.p_phi) < 1e-3 || alpha >= surface.theta_max() - 0.05)
                continue;
            out.push_back(q);
            if (static_cast<int>(out.size()) == want) break;
        }
        return out;
    };

    // Unfolding equivalence + exact reflection bookkeeping.
    const auto starts = interior_starts(50, seed);
    std::vector<double> sup_dev(starts.size(), 0.0);
    std::vector<int> exact_ok(starts.size(), 1);
    parallel_for(static_cast<int>(starts.size()), jobs, [&](int i) {
        const PhasePoint& p0 = starts[static_cast<std::size_t>(i)];
        BilliardOptions opt;
        opt.flow.tol = 1e-9;
        opt.flow.record_steps = false;
        opt.flow.locate_events = false;
        for (int k = 1; k <= 200; ++k)
            opt.flow.sample_times.push_back(20.0 * k / 200);
        const BilliardTrajectory bt = billiard_flow(half, p0, 20.0, opt);
        const Trajectory unfolded = unfold(half, bt);

        FlowOptions direct_opt;
        direct_opt.tol = 1e-9;
        direct_opt.record_steps = false;
        direct_opt.locate_events = false;
        direct_opt.sample_times = opt.flow.sample_times;
        const Trajectory direct = flow(surface, p0, 20.0, direct_opt);

        double dev = 0.0;
        for (std::size_t k = 0; k < unfolded.states.size(); ++k) {
            const PhasePoint& a = unfolded.states[k];
            const PhasePoint& b = direct.states[k];
            dev = std::max(dev, std::abs(a.theta - b.theta));
            dev = std::max(dev, std::abs(a.phi - b.phi));
            dev = std::max(dev, std::abs(a.p_theta - b.p_theta));
            dev = std::max(dev, std::abs(a.p_phi - b.p_phi));
        }
        sup_dev[static_cast<std::size_t>(i)] = dev;
        for (const ReflectionCheck& c : bt.checks) {
            if (c.h_pre != c.h_post || c.p_phi_post != -c.p_phi_pre ||
                !c.tangential_unchanged || !c.reenters)
                exact_ok[static_cast<std::size_t>(i)] = 0;
        }
    });
    double worst = 0.0;
    int exact_failures = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        worst = std::max(worst, sup_dev[i]);
        exact_failures += 1 - exact_ok[i];
    }
    sum.check(worst <= 1e-7, "unfolding equivalence sup error <= 1e-7 (50 starts)",
              "sup = " + fmt(worst));
    sum.check(exact_failures == 0,
              "reflections preserve h bit-exactly and negate p_phi exactly",
              std::to_string(exact_failures) + " failures");

    // (2pi, 2)-periodic band at alpha = 0.3.
    int band_bad = 0;
    double band_worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        PhasePoint p0 = equator_to_phase(surface, {0.3, 0.0, i % 2 ? 1 : -1});
        p0.phi = 0.3 + 0.12 * i;
        BilliardOptions opt;
        opt.flow.tol = 1e-10;
        opt.flow.record_steps = false;
        const BilliardTrajectory bt = billiard_flow(half, p0, kTwoPi, opt);
        const double d = std::sqrt(billiard_return_sq(bt, p0));
        band_worst = std::max(band_worst, d);
        if (d > 1e-6 || bt.reflection_count != 2) ++band_bad;
    }
    sum.check(band_bad == 0,
              "alpha = 0.3 band is (2pi, 2)-periodic within 1e-6",
              "worst return distance = " + fmt(band_worst));

    // Boundary curvature.
    double kappa_worst = 0.0;
    const std::vector<double> thetas = linspace(-1.2, 1.2, 20);
    for (int i = 0; i < 20; ++i) {
        const double xi = (i % 3 == 0) ? 0.7 : (i % 3 == 1 ? 1.0 : 1.5);
        const double wall =
            (i % 2 == 0) ? HalfSurface::wall_low : HalfSurface::wall_high;
        const CurvatureResult res = hamiltonian_curvature(
            half, thetas[static_cast<std::size_t>(i)], xi, 1e-4, wall);
        kappa_worst = std::max(kappa_worst, std::abs(res.kappa));
    }
    sum.check(kappa_worst <= 1e-5, "|kappa| <= 1e-5 at 20 boundary samples",
              "max |kappa| = " + fmt(kappa_worst));

    // No grazing or dead ends over t in [0, 100].
    const auto long_starts = interior_starts(100, seed + 1);
    std::vector<int> flags(long_starts.size(), 0);
    parallel_for(static_cast<int>(long_starts.size()), jobs, [&](int i) {
        BilliardOptions opt;
        opt.flow.tol = 1e-9;
        opt.flow.record_steps = false;
        opt.flow.locate_events = false;
        const BilliardTrajectory bt =
            billiard_flow(half, long_starts[static_cast<std::size_t>(i)], 100.0, opt);
        if (bt.grazing || bt.reflection_cap_hit || bt.path.domain_exit)
            flags[static_cast<std::size_t>(i)] = 1;
    });
    int flagged = 0;
    for (int f : flags) flagged += f;
    sum.check(flagged == 0,
              "zero grazing/dead-end flags over t in [0, 100] (100 starts)",
              std::to_string(flagged) + " flagged");

    std::cout << (sum.failures == 0 ? "thm48: ALL PASS\n" : "thm48: FAILURES\n");
    return sum.failures == 0 ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"geodesic flows and billiards on surfaces of revolution"};
    app.require_subcommand(1);

    try {
        // surface validate
        auto* sc_surface = app.add_subcommand("surface", "surface document tools");
        sc_surface->require_subcommand(1);
        auto* sc_validate = sc_surface->add_subcommand("validate",
                                                       "validate a surface JSON");
        std::string val_path;
        double val_tol = 1e-9;
        sc_validate->add_option("file", val_path, "surface JSON document")->required();
        sc_validate->add_option("--tol", val_tol, "required profile margin");

        // trace
        auto* sc_trace = app.add_subcommand("trace", "integrate one geodesic");
        TraceArgs trace_args;
        sc_trace->add_option("--surface", trace_args.surface_path)->required();
        trace_args.point.add_options(sc_trace);
        sc_trace->add_option("--t-end", trace_args.t_end, "integration time");
        sc_trace->add_option("--tol", trace_args.tol, "trajectory tolerance");
        sc_trace->add_option("--samples", trace_args.samples, "CSV sample count");
        sc_trace->add_option("--out", trace_args.out, "CSV path (default stdout)");
        sc_trace->add_option("--events-out", trace_args.events_out,
                             "JSON event log path");

        // billiard
        auto* sc_bill = app.add_subcommand("billiard",
                                           "integrate one billiard trajectory");
        TraceArgs bill_args;
        sc_bill->add_option("--surface", bill_args.surface_path)->required();
        bill_args.point.add_options(sc_bill);
        sc_bill->add_option("--t-end", bill_args.t_end, "integration time");
        sc_bill->add_option("--tol", bill_args.tol, "trajectory tolerance");
        sc_bill->add_option("--samples", bill_args.samples, "CSV sample count");
        sc_bill->add_option("--out", bill_args.out, "CSV path (default stdout)");
        sc_bill->add_option("--events-out", bill_args.events_out,
                            "JSON event log path");
        sc_bill->add_option("--max-reflections", bill_args.max_reflections,
                            "dead-end guard");

        // period-scan
        auto* sc_scan = app.add_subcommand("period-scan",
                                           "scan T(alpha), R(alpha) over a grid");
        std::string scan_surface, scan_out;
        double scan_min = 0.05, scan_max = 1.2, scan_tol = 1e-10;
        int scan_count = 100, scan_kmax = 20, scan_jobs = 1;
        sc_scan->add_option("--surface", scan_surface)->required();
        sc_scan->add_option("--alpha-min", scan_min);
        sc_scan->add_option("--alpha-max", scan_max);
        sc_scan->add_option("--count", scan_count);
        sc_scan->add_option("--tol", scan_tol);
        sc_scan->add_option("--k-max", scan_kmax);
        sc_scan->add_option("--jobs", scan_jobs);
        sc_scan->add_option("--out", scan_out, "CSV path (default stdout)");

        // classify
        auto* sc_classify = app.add_subcommand("classify",
                                               "classify a single alpha");
        std::string cls_surface;
        double cls_alpha = 0.0, cls_tol = 1e-10;
        int cls_kmax = 20;
        sc_classify->add_option("--surface", cls_surface)->required();
        sc_classify->add_option("--alpha", cls_alpha)->required();
        sc_classify->add_option("--tol", cls_tol);
        sc_classify->add_option("--k-max", cls_kmax);

        // jet
        auto* sc_jet = app.add_subcommand("jet", "displacement jet report");
        std::string jet_surface;
        PointSpec jet_point;
        double jet_T = kTwoPi, jet_fd = 1e-3, jet_tol = 1e-10, jet_jtol = 1e-6;
        int jet_order = 3;
        std::optional<std::uint64_t> jet_seed;
        sc_jet->add_option("--surface", jet_surface)->required();
        jet_point.add_options(sc_jet);
        sc_jet->add_option("--T", jet_T, "tested period");
        sc_jet->add_option("--order", jet_order, "max jet order K <= 4");
        sc_jet->add_option("--fd-step", jet_fd);
        sc_jet->add_option("--tol", jet_tol);
        sc_jet->add_option("--jet-tol", jet_jtol);
        sc_jet->add_option("--seed", jet_seed);

        // return-time
        auto* sc_rt = app.add_subcommand("return-time",
                                         "local return-time minimization");
        std::string rt_surface;
        PointSpec rt_point;
        double rt_guess = kTwoPi, rt_radius = 0.5, rt_tol = 1e-10, rt_fd = 1e-3;
        std::optional<std::uint64_t> rt_seed;
        sc_rt->add_option("--surface", rt_surface)->required();
        rt_point.add_options(sc_rt);
        sc_rt->add_option("--t-guess", rt_guess);
        sc_rt->add_option("--radius", rt_radius);
        sc_rt->add_option("--tol", rt_tol);
        sc_rt->add_option("--fd-step", rt_fd);
        sc_rt->add_option("--seed", rt_seed);

        // measure
        auto* sc_measure = app.add_subcommand("measure",
                                              "Liouville measure estimate");
        std::string measure_surface;
        double measure_T = kTwoPi, measure_tol = 1e-8;
        int measure_n = 10000, measure_kmax = 20, measure_jobs = 1;
        std::optional<std::uint64_t> measure_seed;
        sc_measure->add_option("--surface", measure_surface)->required();
        sc_measure->add_option("--T", measure_T);
        sc_measure->add_option("--n", measure_n);
        sc_measure->add_option("--tol", measure_tol);
        sc_measure->add_option("--k-max", measure_kmax);
        sc_measure->add_option("--seed", measure_seed);
        sc_measure->add_option("--jobs", measure_jobs);

        // curvature
        auto* sc_curv = app.add_subcommand("curvature",
                                           "boundary Hamiltonian curvature");
        std::string curv_surface, curv_out;
        int curv_count = 20;
        double curv_fd = 1e-5;
        sc_curv->add_option("--surface", curv_surface)->required();
        sc_curv->add_option("--count", curv_count);
        sc_curv->add_option("--fd-step", curv_fd);
        sc_curv->add_option("--out", curv_out, "CSV path (default stdout)");

        // carleman
        auto* sc_carl = app.add_subcommand("carleman",
                                           "sequence regularity and divergence");
        std::string carl_kind = "factorial";
        double carl_s = 1.0, carl_tol = 1e-9;
        int carl_n = 50;
        std::vector<double> carl_values;
        sc_carl->add_option("--kind", carl_kind, "factorial|gevrey|explicit");
        sc_carl->add_option("--s", carl_s, "Gevrey index");
        sc_carl->add_option("--values", carl_values, "explicit m_n list")
            ->delimiter(',');
        sc_carl->add_option("--N", carl_n, "checked range");
        sc_carl->add_option("--tol", carl_tol, "convexity tolerance");

        // repro
        auto* sc_repro = app.add_subcommand("repro", "packaged experiments");
        std::string repro_which;
        std::optional<std::uint64_t> repro_seed;
        int repro_jobs = static_cast<int>(std::thread::hardware_concurrency());
        sc_repro->add_option("experiment", repro_which, "thm47 | thm48")->required();
        sc_repro->add_option("--seed", repro_seed);
        sc_repro->add_option("--jobs", repro_jobs);

        app.parse(argc, argv);

        if (sc_validate->parsed()) return cmd_surface_validate(val_path, val_tol);
        if (sc_trace->parsed()) return cmd_trace(trace_args);
        if (sc_bill->parsed()) return cmd_billiard(bill_args);
        if (sc_scan->parsed())
            return cmd_period_scan(scan_surface, scan_min, scan_max, scan_count,
                                   scan_tol, scan_kmax, scan_jobs, scan_out);
        if (sc_classify->parsed())
            return cmd_classify(cls_surface, cls_alpha, cls_tol, cls_kmax);
        if (sc_jet->parsed())
            return cmd_jet(jet_surface, jet_point, jet_T, jet_order, jet_fd,
                           jet_tol, jet_jtol, resolve_seed(jet_seed));
        if (sc_rt->parsed())
            return cmd_return_time(rt_surface, rt_point, rt_guess, rt_radius,
                                   rt_tol, rt_fd, resolve_seed(rt_seed));
        if (sc_measure->parsed())
            return cmd_measure(measure_surface, measure_T, measure_n, measure_tol,
                               measure_kmax, resolve_seed(measure_seed),
                               measure_jobs);
        if (sc_curv->parsed())
            return cmd_curvature(curv_surface, curv_count, curv_fd, curv_out);
        if (sc_carl->parsed())
            return cmd_carleman(carl_kind, carl_s, carl_values, carl_n, carl_tol);
        if (sc_repro->parsed()) {
            const std::uint64_t seed = resolve_seed(repro_seed);
            if (repro_jobs < 1) repro_jobs = 1;
            if (repro_which == "thm47") return cmd_repro_thm47(seed, repro_jobs);
            if (repro_which == "thm48") return cmd_repro_thm48(seed, repro_jobs);
            throw std::runtime_error("unknown experiment '" + repro_which +
                                     "' (thm47 | thm48)");
        }
        throw std::runtime_error("no subcommand selected");
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace revflow
