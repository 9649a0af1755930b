// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "figac/cli.hpp"
#include "figac/config.hpp"
#include "figac/image_io.hpp"
#include "figac/metrics.hpp"
#include "figac/phantom.hpp"
#include "figac/pipeline.hpp"
#include "figac/service.hpp"
#include "oracles.hpp"

using namespace figac;
using config::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int number, const std::string& title, double limit_s, const std::function<void(Verdict&)>& body)
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    }
    catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= limit_s) {
        v.pass = false;
        v.detail << " [runtime " << secs << " s exceeds " << limit_s << " s]";
    }
    failures += !v.pass;
    std::cout << "criterion " << std::setw(2) << number << " " << (v.pass ? "PASS" : "FAIL") << "  " << title << ":"
              << v.detail.str() << " (" << std::fixed << std::setprecision(3) << secs << " s)" << std::endl;
    std::cout.unsetf(std::ios::fixed);
    std::cout << std::setprecision(6);
}

double changed_fraction(const Mask& a, const Mask& b)
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        n += a.values()[i] != b.values()[i];
    return static_cast<double>(n) / static_cast<double>(a.size());
}

// Fraction of the ring interior that the mask leaves out.
double interior_missing(const Mask& mask, const phantom::PhantomSpec& spec)
{
    const Mask interior = phantom::ring_interior(spec);
    std::size_t total = 0, missing = 0;
    for (std::size_t i = 0; i < interior.size(); ++i) {
        if (!interior.values()[i])
            continue;
        ++total;
        missing += !mask.values()[i];
    }
    return static_cast<double>(missing) / static_cast<double>(total);
}

double dice01(const Mask& truth, const Mask& pred) { return metrics::dice({truth, pred}) / 100.0; }

phantom::PhantomSpec spec_of(phantom::Kind kind)
{
    phantom::PhantomSpec s;
    s.kind = kind;
    return s;
}

void thresholds(Verdict& v)
{
    const knowledge::BoneWindowSpec spec;
    const auto t0 = std::chrono::steady_clock::now();
    const double t1 = knowledge::compute_theta1(spec);
    const double t2 = knowledge::compute_theta2(spec);
    const auto sep = knowledge::check_separation(spec);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    v.detail << " theta1=" << t1 << " theta2=" << t2 << " separated=" << sep.separated << " compute " << ms << " ms";
    v.require(t1 == 102.0, "theta1 == 102");
    v.require(std::abs(t2 - 114.75) <= 1e-12, "theta2 == 114.75");
    v.require(std::lround(t2) == 115, "theta2 rounds to 115");
    v.require(sep.separated && sep.theta1 <= sep.theta2, "separation");
    v.require(ms < 1.0, "runtime < 1 ms");
}

void separation_property(Verdict& v)
{
    std::mt19937 rng(2025);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int accepted = 0, branch_b = 0, violations = 0, mismatches = 0;
    while (accepted < 1000) {
        knowledge::BoneWindowSpec s;
        s.w1 = 100.0 + 1900.0 * u(rng);
        s.w2 = s.w1 + 1500.0 * u(rng);
        s.l1 = -300.0 + 900.0 * u(rng);
        s.l2 = s.l1 + 400.0 * u(rng);
        s.S = s.l1 - 600.0 * u(rng);
        s.B = s.l1 - 400.0 + 1200.0 * u(rng);
        const bool first = s.B >= s.l2;
        const bool second = (s.S - s.l1) / s.w2 <= (s.B - s.l2) / s.w1;
        if (!first && !second)
            continue;
        ++accepted;
        branch_b += first;
        const double t1 = knowledge::compute_theta1(s);
        const double t2 = knowledge::compute_theta2(s);
        violations += !(t1 <= t2);
        violations += !knowledge::check_separation(s).separated;
        const auto ref = oracle::brute_theta(s, 120);
        mismatches += std::abs(t1 - ref.theta1) > ref.lattice_step + 1e-9;
        mismatches += std::abs(t2 - ref.theta2) > ref.lattice_step + 1e-9;
    }
    v.detail << " specs=" << accepted << " (B>=l2: " << branch_b << ") order violations=" << violations
             << " lattice mismatches=" << mismatches;
    v.require(violations == 0, "theta1 <= theta2 for every spec");
    v.require(mismatches == 0, "closed forms within one lattice step");
}

void pde_correctness(Verdict& v)
{
    const double r = 30.0;
    const ScalarField phi = oracle::circle_sdf(128, 63.5, 63.5, r);
    const ScalarField k = levelset::curvature_divergence(phi, ScalarField(128, 128, 1.0));
    double worst = 0.0;
    int on = 0;
    for (std::size_t i = 0; i < phi.size(); ++i)
        if (std::abs(phi.values()[i]) < 0.5) {
            ++on;
            worst = std::max(worst, std::abs(k.values()[i] * r - 1.0));
        }
    v.detail << " curvature max rel err=" << worst << " over " << on << " px";
    v.require(on > 0 && worst <= 0.1, "curvature within 10% of 1/30");

    const ScalarField distorted = ScalarField::generate(128, 128, [](int rr, int cc) {
        const double d = std::hypot(rr - 63.5, cc - 63.5) - 30.0;
        return d * (3.0 + std::sin(0.2 * rr) * std::cos(0.15 * cc)) + 0.01 * d * d * d;
    });
    const ScalarField re = levelset::reinitialize(distorted);
    const Gradient g = gradient(re);
    int far = 0, good = 0;
    for (int rr = 1; rr < 127; ++rr)
        for (int cc = 1; cc < 127; ++cc) {
            if (std::abs(re(rr, cc)) <= 2.0)
                continue;
            ++far;
            const double n = std::hypot(g.gx(rr, cc), g.gy(rr, cc));
            good += n >= 0.8 && n <= 1.2;
        }
    const double frac = static_cast<double>(good) / far;
    v.detail << "; far-field unit slope fraction=" << frac;
    v.require(frac >= 0.99, "|grad phi| in [0.8, 1.2] on >= 99% of far field");
}

void energy_descent(Verdict& v)
{
    const int n = 128;
    const ScalarField img = ScalarField::generate(n, n, [](int r, int c) {
        return std::hypot(r - 63.5, c - 63.5) <= 30.0 ? 200.0 : 20.0;
    });
    const auto g = std::make_shared<const ScalarField>(knowledge::edge_detector_proposed(img, {}));
    levelset::EvolutionParams p;
    p.h = 0.05;
    p.alpha = 1.0;
    p.speed_factor = levelset::SpeedFactor::delta_eps;
    levelset::EvolutionState s{oracle::circle_sdf(n, 63.5, 63.5, 45.0), 0, g, nullptr, p};
    double prev = levelset::smoothed_energy(s.phi, *g, p.alpha, p.epsilon);
    const double start = prev;
    double worst_rise = 0.0;
    for (int w = 0; w < 20; ++w) {
        for (int i = 0; i < 100; ++i)
            s = levelset::step_classical(s);
        const double e = levelset::smoothed_energy(s.phi, *g, p.alpha, p.epsilon);
        worst_rise = std::max(worst_rise, e - prev);
        prev = e;
    }
    v.detail << " energy " << start << " -> " << prev << " after 2000 steps, worst window rise=" << worst_rise;
    v.require(worst_rise <= 1e-3, "energy non-increasing per 100-step window");
    v.require(prev < start, "energy decreased overall");
}

void obstruction(Verdict& v)
{
    const auto ring = phantom::make_phantom(spec_of(phantom::Kind::ring));
    const auto blob_spec = spec_of(phantom::Kind::ring_with_blob);
    const auto blob = phantom::make_phantom(blob_spec);
    const pipeline::PipelineConfig cfg;
    const auto a = pipeline::run(ring.image, cfg);
    const auto b = pipeline::run(blob.image, cfg);
    const double da = dice01(ring.truth, a.mask);
    const double db = dice01(blob.truth, b.mask);
    std::size_t blob_in_mask = 0;
    for (std::size_t i = 0; i < blob.image.size(); ++i)
        blob_in_mask += blob.image.values()[i] == blob_spec.blob_gray && b.mask.values()[i];
    v.detail << " dice ring=" << da << " ring+blob=" << db << " blob pixels in mask=" << blob_in_mask;
    v.require(db >= 0.97, "dice with distractor >= 0.97");
    v.require(std::abs(da - db) <= 0.005, "dice unchanged within 0.005");
}

void fracture_prompt(Verdict& v)
{
    const auto spec = spec_of(phantom::Kind::fractured_ring);
    const auto ph = phantom::make_phantom(spec);
    pipeline::PipelineConfig cfg;
    const auto without = pipeline::run(ph.image, cfg);
    cfg.prompts = phantom::suggested_fracture_prompt(spec);
    const auto with = pipeline::run(ph.image, cfg);
    const double dw = dice01(ph.truth, with.mask);
    const double dn = dice01(ph.truth, without.mask);
    v.detail << " dice with prompt=" << dw << " without=" << dn
             << " interior missing without prompt=" << interior_missing(without.mask, spec);
    v.require(dw >= 0.95, "prompted dice >= 0.95");
    v.require(dw - dn >= 0.10, "dice drop >= 0.10 without the prompt");
}

void stability(Verdict& v)
{
    const auto spec = spec_of(phantom::Kind::fractured_ring);
    const auto ph = phantom::make_phantom(spec);

    pipeline::PipelineConfig cfg;
    cfg.prompts = phantom::suggested_fracture_prompt(spec);
    cfg.stopping.plateau = true;
    const auto fields = pipeline::prepare(ph.image, cfg);
    auto state = pipeline::initial_state(fields, cfg);
    pipeline::PlateauDetector plateau(cfg.stopping);
    pipeline::evolve(state, cfg.mode, 20000, [&](const levelset::EvolutionState& s) { return !plateau.update(s); });
    const int converged = state.iter;
    const Mask at = levelset::extract_mask(state.phi);
    pipeline::evolve(state, cfg.mode, 1000);
    const double drift = changed_fraction(at, levelset::extract_mask(state.phi));
    v.detail << " FI-GAC converged at " << converged << ", change after +1000 = " << 100.0 * drift << "%";
    v.require(converged < 20000, "FI-GAC converges");
    v.require(drift <= 0.005, "mask change <= 0.5% after +1000 iterations");

    pipeline::PipelineConfig classical;
    classical.mode = pipeline::Mode::classical;
    classical.evolution.alpha = 1.0;
    classical.evolution.h = 0.1;
    const auto cf = pipeline::prepare(ph.image, classical);
    auto cs = pipeline::initial_state(cf, classical);
    pipeline::evolve(cs, classical.mode, 3000);
    const double leak3 = interior_missing(levelset::extract_mask(cs.phi), spec);
    pipeline::evolve(cs, classical.mode, 3000);
    const double leak6 = interior_missing(levelset::extract_mask(cs.phi), spec);
    v.detail << "; classical interior lost at 3000/6000 = " << 100.0 * leak3 << "% / " << 100.0 * leak6 << "%";
    v.require(leak3 > 0.05 && leak6 > 0.05, "classical contour leaks into the ring interior");
}

void alpha_robustness(Verdict& v)
{
    const auto ph = phantom::make_phantom(spec_of(phantom::Kind::ring));
    const int total = 4000;
    const int every = 10;
    std::vector<double> dices;
    std::vector<int> conv;
    for (double alpha : {1.0, 1.2, 1.4, 1.6}) {
        pipeline::PipelineConfig cfg;
        cfg.evolution.alpha = alpha;
        cfg.evolution.h = 0.1;
        const auto fields = pipeline::prepare(ph.image, cfg);
        auto state = pipeline::initial_state(fields, cfg);
        std::vector<std::pair<int, Mask>> history;
        pipeline::evolve(state, cfg.mode, total, [&](const levelset::EvolutionState& s) {
            if (s.iter % every == 0)
                history.emplace_back(s.iter, levelset::extract_mask(s.phi));
            return true;
        });
        const Mask& final_mask = history.back().second;
        // First recorded iteration after which the mask stays within 0.05% of its final state.
        int at = history.back().first;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (changed_fraction(it->second, final_mask) > 0.0005)
                break;
            at = it->first;
        }
        dices.push_back(dice01(ph.truth, final_mask));
        conv.push_back(at);
    }
    const auto [lo, hi] = std::minmax_element(dices.begin(), dices.end());
    v.detail << " dice";
    for (double d : dices)
        v.detail << " " << d;
    v.detail << " convergence iterations";
    for (int c : conv)
        v.detail << " " << c;
    v.require(*hi - *lo <= 0.02, "dice spread <= 0.02");
    bool ordered = true;
    for (std::size_t i = 1; i < conv.size(); ++i)
        ordered = ordered && conv[i] <= conv[i - 1];
    v.require(ordered, "convergence iteration non-increasing in alpha");
    v.require(conv.front() < total, "all runs converge");
}

void metric_oracles(Verdict& v)
{
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> density(0.1, 0.7);
    double worst = 0.0, identity = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Mask g = t % 2 ? oracle::random_mask(rng, 32, 32, density(rng)) : oracle::random_blocks(rng, 32, 32, 3);
        const Mask s = t % 3 ? oracle::random_mask(rng, 32, 32, density(rng)) : oracle::random_blocks(rng, 32, 32, 2);
        const auto ref = oracle::brute_metrics(g, s);
        const metrics::MaskPair p(g, s);
        worst = std::max({worst, std::abs(metrics::dice(p) - ref.dice), std::abs(metrics::jaccard(p) - ref.jaccard),
                          std::abs(metrics::hausdorff(p) - ref.hd), std::abs(metrics::assd(p) - ref.assd)});
        const double j = metrics::jaccard(p) / 100.0;
        identity = std::max(identity, std::abs(metrics::dice(p) / 100.0 - 2.0 * j / (1.0 + j)));
    }
    v.detail << " max deviation from brute force=" << worst << " identity residual=" << identity;
    v.require(worst <= 1e-9, "agreement with brute force");
    v.require(identity <= 1e-9, "Dice = 2J/(1+J)");
}

void distance_oracle(Verdict& v)
{
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> density(0.002, 0.05);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        Mask edges = oracle::random_mask(rng, 64, 64, density(rng));
        if (count(edges) == 0)
            edges(rng() % 64, rng() % 64) = 1;
        const auto beta = edges::distance_factor(edges::EdgeSet{edges});
        const auto ref = oracle::brute_normalized_distance(edges);
        for (std::size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(beta.field.values()[i] - ref[i]));
    }
    v.detail << " max deviation=" << worst;
    v.require(worst <= 1e-9, "distance factor equals brute force");
}

void parity(Verdict& v)
{
    const fs::path work = fs::temp_directory_path() / ("figac_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(work);
    const auto ph = phantom::make_phantom(spec_of(phantom::Kind::ring));
    const std::string png = io::encode_png(io::gray_image(ph.image));
    io::write_file(work / "image.png", png);

    std::ostringstream out, err;
    const int code = cli::run_cli({"segment", "--image", (work / "image.png").string(), "--out", (work / "cli").string()},
                                  out, err);
    v.require(code == 0, "segment exits 0");
    const std::string cli_mask = io::read_file(work / "cli/mask.png");

    std::string svc_mask;
    {
        service::Service svc(service::ServiceOptions{work / "data"});
        const int port = svc.bind_to_any_port("127.0.0.1");
        std::thread server([&] { svc.listen_after_bind(); });
        svc.wait_until_ready();
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(60, 0);
        const auto up = c.Post("/slices", png, "image/png");
        const std::string slice = json::parse(up->body)["slice_id"];
        const auto job = c.Post("/jobs", json{{"slice_id", slice}}.dump(), "application/json");
        const std::string id = json::parse(job->body)["id"];
        c.Post("/jobs/" + id + "/run", "{}", "application/json");
        std::string state = "running";
        while (state == "running") {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            state = json::parse(c.Get("/jobs/" + id)->body)["state"];
        }
        v.require(state == "converged", "job converges");
        svc_mask = c.Get("/jobs/" + id + "/mask")->body;
        svc.stop();
        server.join();
    }
    const Mask a = io::to_mask(io::decode_png(cli_mask));
    const Mask b = io::to_mask(io::decode_png(svc_mask));
    v.detail << " mask pixels cli=" << count(a) << " service=" << count(b) << " png bytes identical="
             << (cli_mask == svc_mask);
    v.require(a == b, "identical masks");
    v.require(cli_mask == svc_mask, "identical PNG bytes");
    fs::remove_all(work);
}

}  // namespace

int main()
{
    criterion(1, "threshold derivation", 1.0, thresholds);
    criterion(2, "separation property", 10.0, separation_property);
    criterion(3, "PDE correctness", 5.0, pde_correctness);
    criterion(4, "energy descent", 30.0, energy_descent);
    criterion(5, "edge-obstruction robustness", 60.0, obstruction);
    criterion(6, "fracture-prompt efficacy", 60.0, fracture_prompt);
    criterion(7, "stability and no leak", 120.0, stability);
    criterion(8, "alpha robustness", 120.0, alpha_robustness);
    criterion(9, "metric oracles", 10.0, metric_oracles);
    criterion(10, "distance-transform oracle", 10.0, distance_oracle);
    criterion(11, "CLI/service parity", 60.0, parity);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
