#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "figac/edges.hpp"
#include "figac/knowledge.hpp"
#include "figac/levelset.hpp"

namespace figac::pipeline {

enum class Mode { figac, classical };

struct WindowParams {
    double width = 1250.0;
    double level = 300.0;
};

struct InitParams {
    std::optional<double> intensity_thresh;  ///< defaults to theta2
    int margin = 4;
};

struct PostprocessParams {
    bool inner_holes = false;
    bool narrow_gaps = false;
    std::vector<Pixel> gap_seeds;
    double gap_tol = 20.0;
    double hole_alpha = -1.0;
    int hole_iters = 1500;
    double hole_seed_radius = 3.0;
};

/// Optional early stop once the mask changes by less than `tol` (fraction of pixels) over `window` iterations.
struct StoppingParams {
    bool plateau = false;
    int window = 200;
    double tol = 0.0005;
};

struct PipelineConfig {
    Mode mode = Mode::figac;
    WindowParams window;
    knowledge::BoneWindowSpec spec;
    knowledge::EdgeDetectorParams detector;
    std::optional<knowledge::Presmooth> classical_presmooth = knowledge::Presmooth{};
    edges::CannyParams canny;
    double eta = 70.0;
    int kernel_size = 3;
    levelset::EvolutionParams evolution;
    std::optional<levelset::Box> init_box;
    InitParams init;
    edges::PromptSet prompts;
    PostprocessParams postprocess;
    StoppingParams stopping;
    int snapshot_every = 0;  ///< 0 disables snapshots

    void validate() const;
};

/// Either a raw CT slice (windowed first) or an already windowed gray-level image.
using InputImage = std::variant<CtSlice, ScalarField>;

/// Everything computed before the first evolution step.
struct PreparedFields {
    ScalarField image;  ///< windowed gray levels
    levelset::Box box;
    ScalarField phi0;
    Mask roi;
    std::shared_ptr<const ScalarField> g;
    edges::EdgeSet all_edges;
    edges::EdgeSet bone_edges;
    edges::EdgeSet stopping_set;  ///< bone edges plus rasterized prompts
    std::shared_ptr<const edges::DistanceField> beta;
    double theta1 = 0.0;
    double theta2 = 0.0;
    bool separated = false;
    bool detector_in_range = false;
    nlohmann::json timing_ms = nlohmann::json::object();
};

struct Snapshot {
    int iter = 0;
    std::vector<levelset::Polyline> contour;
};

struct SegmentationResult {
    Mask mask;
    std::vector<levelset::Polyline> contour;
    int iterations_run = 0;
    std::vector<Snapshot> snapshots;
    nlohmann::json diagnostics = nlohmann::json::object();  ///< deterministic statistics
    nlohmann::json timing_ms = nlohmann::json::object();
};

ScalarField windowed(const InputImage& input, const PipelineConfig& cfg);

/// Bounding box of {image >= intensity_thresh}, dilated by `margin` and kept one pixel inside the frame.
levelset::Box auto_init_box(const ScalarField& image, double intensity_thresh, int margin);

/// Window, initial contour, edge detector, edges and distance factor.
PreparedFields prepare(const InputImage& input, const PipelineConfig& cfg);

/// Recomputes the stopping set and distance factor for a new prompt set.
void apply_prompts(PreparedFields& fields, const edges::PromptSet& prompts);

levelset::EvolutionState initial_state(const PreparedFields& fields, const PipelineConfig& cfg);

/// One solver step in the configured mode, followed by reinitialization on schedule.
void advance(levelset::EvolutionState& state, Mode mode);

/// Advances up to `steps` iterations. `after_step` may return false to stop early.
/// Returns the number of iterations executed.
int evolve(levelset::EvolutionState& state, Mode mode, int steps,
           const std::function<bool(const levelset::EvolutionState&)>& after_step = {});

/// Tracks mask changes for the optional plateau stop.
class PlateauDetector {
public:
    explicit PlateauDetector(StoppingParams params) : params_(params) {}
    /// Returns true when the mask has settled.
    bool update(const levelset::EvolutionState& state);

private:
    StoppingParams params_;
    std::optional<Mask> last_;
};

/// Mask, contour and post-processing for an evolved state.
SegmentationResult finalize(const levelset::EvolutionState& state, const PreparedFields& fields,
                            const PipelineConfig& cfg);

SegmentationResult run(const InputImage& input, const PipelineConfig& cfg);

/// Fills background components enclosed by the mask unless an expanding contour seeded
/// inside them is held back by edges, which marks a genuine hole.
Mask fill_inner_holes(const Mask& mask, const PreparedFields& fields, const PipelineConfig& cfg);

/// Local 4-connected region growing from each seed inside a 31x31 window.
Mask bridge_narrow_gaps(const Mask& mask, const ScalarField& image, const std::vector<Pixel>& seeds, double tol);

/// Enclosed background components (4-connected, not touching the frame).
std::vector<std::vector<Pixel>> enclosed_holes(const Mask& mask);

}  // namespace figac::pipeline
