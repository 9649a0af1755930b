#include "figac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>

namespace figac::pipeline {

using levelset::Box;
using levelset::EvolutionState;

void PipelineConfig::validate() const
{
    if (!(window.width > 0.0))
        throw ParameterError("window.width must be positive");
    spec.validate();
    detector.validate();
    if (classical_presmooth && (classical_presmooth->size < 1 || classical_presmooth->size % 2 == 0 ||
                                !(classical_presmooth->sigma > 0.0)))
        throw ParameterError("classical_presmooth.size must be odd and positive and classical_presmooth.sigma positive");
    canny.validate();
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ParameterError("kernel_size must be odd and positive");
    if (!std::isfinite(eta))
        throw ParameterError("eta must be finite");
    evolution.validate();
    if (init.margin < 0)
        throw ParameterError("init.margin must be non-negative");
    if (!(postprocess.hole_alpha < 0.0))
        throw ParameterError("postprocess.hole_alpha must be negative");
    if (postprocess.hole_iters < 0)
        throw ParameterError("postprocess.hole_iters must be non-negative");
    if (!(postprocess.hole_seed_radius > 0.0))
        throw ParameterError("postprocess.hole_seed_radius must be positive");
    if (!(postprocess.gap_tol >= 0.0))
        throw ParameterError("postprocess.gap_tol must be non-negative");
    if (stopping.window < 1 || !(stopping.tol >= 0.0))
        throw ParameterError("stopping.window must be positive and stopping.tol non-negative");
    if (snapshot_every < 0)
        throw ParameterError("snapshot_every must be non-negative");
}

namespace {

template <class F>
auto stage(const char* name, nlohmann::json& timing, F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
        timing[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record();
        }
        else {
            auto out = f();
            record();
            return out;
        }
    }
    catch (const StageError&) {
        throw;
    }
    catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

ScalarField windowed(const InputImage& input, const PipelineConfig& cfg)
{
    if (const auto* slice = std::get_if<CtSlice>(&input))
        return knowledge::apply_window(*slice, cfg.window.width, cfg.window.level);
    return std::get<ScalarField>(input);
}

Box auto_init_box(const ScalarField& image, double intensity_thresh, int margin)
{
    int rmin = image.height(), rmax = -1, cmin = image.width(), cmax = -1;
    for (int r = 0; r < image.height(); ++r) {
        for (int c = 0; c < image.width(); ++c) {
            if (image(r, c) >= intensity_thresh) {
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                cmin = std::min(cmin, c);
                cmax = std::max(cmax, c);
            }
        }
    }
    if (rmax < 0)
        throw ParameterError("no bone-candidate region above intensity " + std::to_string(intensity_thresh));
    Box b{std::max(1, rmin - margin), std::max(1, cmin - margin), std::min(image.height() - 2, rmax + margin),
          std::min(image.width() - 2, cmax + margin)};
    // A single bright pixel on the frame with zero margin still needs a non-degenerate box.
    if (b.r0 >= b.r1)
        b.r1 = std::min(image.height() - 2, b.r0 + 1), b.r0 = b.r1 - 1;
    if (b.c0 >= b.c1)
        b.c1 = std::min(image.width() - 2, b.c0 + 1), b.c0 = b.c1 - 1;
    return b;
}

PreparedFields prepare(const InputImage& input, const PipelineConfig& cfg)
{
    cfg.validate();
    PreparedFields out;
    auto& timing = out.timing_ms;

    out.image = stage("window", timing, [&] { return windowed(input, cfg); });

    stage("thresholds", timing, [&] {
        const auto sep = knowledge::check_separation(cfg.spec);
        out.theta1 = sep.theta1;
        out.theta2 = sep.theta2;
        out.separated = sep.separated;
        try {
            cfg.detector.validate(sep.theta1, sep.theta2);
            out.detector_in_range = true;
        }
        catch (const ParameterError&) {
            out.detector_in_range = false;
        }
    });

    stage("init", timing, [&] {
        out.box = cfg.init_box ? *cfg.init_box
                               : auto_init_box(out.image, cfg.init.intensity_thresh.value_or(out.theta2),
                                               cfg.init.margin);
        out.phi0 = levelset::signed_distance_from_box(out.image.width(), out.image.height(), out.box);
        out.roi = levelset::extract_mask(out.phi0);
    });

    stage("edge_detector", timing, [&] {
        if (cfg.mode == Mode::figac)
            out.g = std::make_shared<const ScalarField>(knowledge::edge_detector_proposed(out.image, cfg.detector));
        else
            out.g = std::make_shared<const ScalarField>(
                knowledge::edge_detector_classical(out.image, cfg.classical_presmooth));
    });

    stage("edges", timing, [&] {
        out.all_edges = edges::canny(out.image, cfg.canny);
        out.bone_edges =
            edges::filter_bone_edges(out.all_edges, out.image, out.roi, Kernel::average(cfg.kernel_size), cfg.eta);
    });

    stage("distance", timing, [&] { apply_prompts(out, cfg.prompts); });
    return out;
}

void apply_prompts(PreparedFields& fields, const edges::PromptSet& prompts)
{
    fields.stopping_set = edges::embed_prompts(fields.bone_edges, prompts);
    fields.beta = std::make_shared<const edges::DistanceField>(edges::distance_factor(fields.stopping_set));
}

EvolutionState initial_state(const PreparedFields& fields, const PipelineConfig& cfg)
{
    EvolutionState s{fields.phi0, 0, fields.g, cfg.mode == Mode::figac ? fields.beta : nullptr, cfg.evolution};
    s.validate();
    return s;
}

void advance(EvolutionState& state, Mode mode)
{
    state = mode == Mode::figac ? levelset::step_figac(state) : levelset::step_classical(state);
    if (state.iter % state.params.reinit_every == 0)
        state.phi = levelset::reinitialize(state.phi);
}

int evolve(EvolutionState& state, Mode mode, int steps,
           const std::function<bool(const EvolutionState&)>& after_step)
{
    int done = 0;
    while (done < steps) {
        advance(state, mode);
        ++done;
        if (after_step && !after_step(state))
            break;
    }
    return done;
}

bool PlateauDetector::update(const EvolutionState& state)
{
    if (state.iter % params_.window != 0)
        return false;
    Mask now = levelset::extract_mask(state.phi);
    bool settled = false;
    if (last_) {
        std::size_t changed = 0;
        auto a = now.values();
        auto b = last_->values();
        for (std::size_t i = 0; i < a.size(); ++i)
            changed += a[i] != b[i];
        settled = static_cast<double>(changed) < params_.tol * static_cast<double>(a.size());
    }
    last_ = std::move(now);
    return settled;
}

SegmentationResult finalize(const EvolutionState& state, const PreparedFields& fields, const PipelineConfig& cfg)
{
    SegmentationResult out;
    out.iterations_run = state.iter;
    out.mask = levelset::extract_mask(state.phi);
    out.contour = levelset::extract_contour(state.phi);
    out.timing_ms = fields.timing_ms;

    const std::size_t raw_pixels = count(out.mask);
    stage("postprocess", out.timing_ms, [&] {
        if (cfg.postprocess.inner_holes)
            out.mask = fill_inner_holes(out.mask, fields, cfg);
        if (cfg.postprocess.narrow_gaps)
            out.mask = bridge_narrow_gaps(out.mask, fields.image, cfg.postprocess.gap_seeds, cfg.postprocess.gap_tol);
    });

    auto& d = out.diagnostics;
    d["theta1"] = fields.theta1;
    d["theta2"] = fields.theta2;
    d["separated"] = fields.separated;
    d["detector_in_range"] = fields.detector_in_range;
    d["init_box"] = {fields.box.r0, fields.box.c0, fields.box.r1, fields.box.c1};
    d["edges"] = {{"all", count(fields.all_edges.mask)},
                  {"bone", count(fields.bone_edges.mask)},
                  {"stopping", count(fields.stopping_set.mask)}};
    d["g"] = {{"min", fields.g->min()}, {"max", fields.g->max()}};
    d["iterations_run"] = out.iterations_run;
    d["mask_pixels"] = {{"evolved", raw_pixels}, {"final", count(out.mask)}};
    d["contours"] = out.contour.size();
    return out;
}

SegmentationResult run(const InputImage& input, const PipelineConfig& cfg)
{
    PreparedFields fields = prepare(input, cfg);
    EvolutionState state = stage("init", fields.timing_ms, [&] { return initial_state(fields, cfg); });

    std::vector<Snapshot> snapshots;
    PlateauDetector plateau(cfg.stopping);
    std::optional<int> settled_at;
    stage("evolution", fields.timing_ms, [&] {
        evolve(state, cfg.mode, cfg.evolution.n_iters, [&](const EvolutionState& s) {
            if (cfg.snapshot_every > 0 && s.iter % cfg.snapshot_every == 0)
                snapshots.push_back({s.iter, levelset::extract_contour(s.phi)});
            if (cfg.stopping.plateau && plateau.update(s)) {
                settled_at = s.iter;
                return false;
            }
            return true;
        });
    });

    SegmentationResult out = finalize(state, fields, cfg);
    out.snapshots = std::move(snapshots);
    out.diagnostics["plateau_iter"] = settled_at ? nlohmann::json(*settled_at) : nlohmann::json(nullptr);
    return out;
}

std::vector<std::vector<Pixel>> enclosed_holes(const Mask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    Grid<int> label(w, h, -1);
    std::vector<std::vector<Pixel>> holes;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (mask(r, c) || label(r, c) >= 0)
                continue;
            std::vector<Pixel> comp;
            bool touches_frame = false;
            std::queue<Pixel> q;
            q.push({r, c});
            label(r, c) = 1;
            while (!q.empty()) {
                const Pixel p = q.front();
                q.pop();
                comp.push_back(p);
                if (p.row == 0 || p.col == 0 || p.row == h - 1 || p.col == w - 1)
                    touches_frame = true;
                constexpr int dr[] = {-1, 1, 0, 0};
                constexpr int dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int rr = p.row + dr[k];
                    const int cc = p.col + dc[k];
                    if (mask.contains(rr, cc) && !mask(rr, cc) && label(rr, cc) < 0) {
                        label(rr, cc) = 1;
                        q.push({rr, cc});
                    }
                }
            }
            if (!touches_frame)
                holes.push_back(std::move(comp));
        }
    }
    return holes;
}

Mask fill_inner_holes(const Mask& mask, const PreparedFields& fields, const PipelineConfig& cfg)
{
    Mask out = mask;
    const int w = mask.width();
    const int h = mask.height();
    for (const auto& hole : enclosed_holes(mask)) {
        double sr = 0.0, sc = 0.0;
        for (const Pixel& p : hole)
            sr += p.row, sc += p.col;
        sr /= hole.size();
        sc /= hole.size();
        // The centroid of a non-convex hole may fall outside it; seed at the nearest hole pixel.
        Pixel seed = *std::min_element(hole.begin(), hole.end(), [&](const Pixel& a, const Pixel& b) {
            return std::hypot(a.row - sr, a.col - sc) < std::hypot(b.row - sr, b.col - sc);
        });

        const double radius = cfg.postprocess.hole_seed_radius;
        ScalarField phi = ScalarField::generate(
            w, h, [&](int r, int c) { return std::hypot(r - seed.row, c - seed.col) - radius; });

        levelset::EvolutionParams params = cfg.evolution;
        params.alpha = cfg.postprocess.hole_alpha;
        EvolutionState state{std::move(phi), 0, fields.g, cfg.mode == Mode::figac ? fields.beta : nullptr, params};

        Mask in_hole(w, h, 0);
        for (const Pixel& p : hole)
            in_hole(p.row, p.col) = 1;
        // Two-pixel tolerance band around the hole for the containment test.
        Mask band(w, h, 0);
        {
            const Grid<double> d2 = squared_distance_to(in_hole);
            for (std::size_t i = 0; i < band.size(); ++i)
                band.values()[i] = d2.values()[i] <= 4.0;
        }

        // The hole is genuine background when the expansion fills most of it, stops at its rim and
        // the delineated region is darker than the bone intensity ramp start.
        bool contained = false;
        Mask grown;
        try {
            evolve(state, cfg.mode, cfg.postprocess.hole_iters);
            grown = levelset::extract_mask(state.phi);
            std::size_t outside = 0, total = 0, covered = 0;
            double gray = 0.0;
            for (std::size_t i = 0; i < grown.size(); ++i) {
                if (!grown.values()[i])
                    continue;
                ++total;
                outside += !band.values()[i];
                if (in_hole.values()[i]) {
                    ++covered;
                    gray += fields.image.values()[i];
                }
            }
            contained = static_cast<double>(outside) <= 0.05 * static_cast<double>(total) &&
                        static_cast<double>(covered) >= 0.5 * static_cast<double>(hole.size()) &&
                        gray / static_cast<double>(covered) < cfg.detector.eps1;
        }
        catch (const levelset::ContourVanished&) {
            contained = false;  // expansion swallowed the whole frame
        }

        for (const Pixel& p : hole)
            if (!contained || !grown(p.row, p.col))
                out(p.row, p.col) = 1;
    }
    return out;
}

Mask bridge_narrow_gaps(const Mask& mask, const ScalarField& image, const std::vector<Pixel>& seeds, double tol)
{
    if (!image.same_shape(mask))
        throw ParameterError("mask and image must have the same dimensions");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        if (!mask.contains(seeds[i].row, seeds[i].col))
            throw ParameterError("gap seed " + std::to_string(i) + " lies outside the image");

    constexpr int half = 15;
    Mask out = mask;
    for (const Pixel& seed : seeds) {
        const double ref = image(seed.row, seed.col);
        Mask seen(mask.width(), mask.height(), 0);
        std::queue<Pixel> q;
        q.push(seed);
        seen(seed.row, seed.col) = 1;
        while (!q.empty()) {
            const Pixel p = q.front();
            q.pop();
            out(p.row, p.col) = 1;
            constexpr int dr[] = {-1, 1, 0, 0};
            constexpr int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int rr = p.row + dr[k];
                const int cc = p.col + dc[k];
                if (!mask.contains(rr, cc) || seen(rr, cc))
                    continue;
                if (std::abs(rr - seed.row) > half || std::abs(cc - seed.col) > half)
                    continue;
                if (std::abs(image(rr, cc) - ref) > tol)
                    continue;
                seen(rr, cc) = 1;
                q.push({rr, cc});
            }
        }
    }
    return out;
}

}  // namespace figac::pipeline
