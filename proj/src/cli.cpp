#include "figac/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "figac/config.hpp"
#include "figac/image_io.hpp"
#include "figac/metrics.hpp"
#include "figac/phantom.hpp"
#include "figac/pipeline.hpp"

namespace figac::cli {

namespace fs = std::filesystem;
using config::json;

namespace {

// Raised for problems the caller can fix by changing arguments or input files.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Common {
    std::string image;
    std::string config_path;
    std::string prompts_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--image", c.image, "Input PNG (8-bit windowed, or 16-bit HU with a .json description)")
        ->required();
    cmd->add_option("--config", c.config_path, "Pipeline configuration JSON");
    cmd->add_option("--prompts", c.prompts_path, "Fracture prompt strokes JSON");
    cmd->add_option("--set", c.overrides, "Override a configuration key, e.g. evolution.alpha=1.2");
    cmd->add_option("--out", c.out_dir, "Output directory")->required();
}

json load_document(const std::string& path, const std::vector<std::string>& overrides)
{
    json doc = path.empty() ? json::object() : config::read_json_file(path);
    for (const auto& o : overrides)
        config::apply_override(doc, o);
    return doc;
}

struct Job {
    pipeline::PipelineConfig cfg;
    pipeline::InputImage input;
    ScalarField windowed;
};

// Everything that can fail because of the caller's inputs happens here.
Job load_job(const Common& c)
{
    Job job;
    try {
        job.cfg = config::pipeline_from_json(load_document(c.config_path, c.overrides));
        if (!c.prompts_path.empty()) {
            const auto extra = config::prompts_from_json(config::read_json_file(c.prompts_path));
            job.cfg.prompts.strokes.insert(job.cfg.prompts.strokes.end(), extra.strokes.begin(),
                                           extra.strokes.end());
        }
        job.cfg.validate();
        job.input = io::load_slice(c.image);
        job.windowed = pipeline::windowed(job.input, job.cfg);
        edges::validate_prompts(job.cfg.prompts, job.windowed.width(), job.windowed.height());
        if (job.cfg.init_box)
            levelset::validate_box(*job.cfg.init_box, job.windowed.width(), job.windowed.height());
    }
    catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    catch (const IoError& e) {
        throw UsageError(e.what());
    }
    return job;
}

fs::path prepare_out(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

std::string snapshot_name(int iter, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "snapshot_%06d.%s", iter, ext);
    return buf;
}

void write_result(const fs::path& out, const pipeline::SegmentationResult& res, const pipeline::PipelineConfig& cfg)
{
    io::write_file(out / "mask.png", io::encode_png(io::mask_image(res.mask)));
    config::write_json_file(out / "contour.json",
                            {{"iter", res.iterations_run}, {"polylines", config::to_json(res.contour)}});
    json diag = res.diagnostics;
    diag["config"] = config::to_json(cfg);
    config::write_json_file(out / "diagnostics.json", diag);
    config::write_json_file(out / "timing.json", res.timing_ms);
}

int cmd_segment(const Common& c, std::ostream& out)
{
    Job job = load_job(c);
    job.cfg.snapshot_every = 0;
    const fs::path dir = prepare_out(c.out_dir);
    const auto res = pipeline::run(job.input, job.cfg);
    write_result(dir, res, job.cfg);
    out << "segmented " << count(res.mask) << " pixels in " << res.iterations_run << " iterations\n";
    return kExitOk;
}

int cmd_evolve(const Common& c, int snapshot_every, std::ostream& out)
{
    Job job = load_job(c);
    job.cfg.snapshot_every = snapshot_every;
    const fs::path dir = prepare_out(c.out_dir);
    const auto res = pipeline::run(job.input, job.cfg);
    for (const auto& snap : res.snapshots) {
        io::write_file(dir / snapshot_name(snap.iter, "png"),
                       io::encode_png(io::overlay(job.windowed, snap.contour)));
        config::write_json_file(dir / snapshot_name(snap.iter, "json"),
                                {{"iter", snap.iter}, {"polylines", config::to_json(snap.contour)}});
    }
    write_result(dir, res, job.cfg);
    io::write_file(dir / "overlay.png", io::encode_png(io::overlay(job.windowed, res.contour)));
    out << "wrote " << res.snapshots.size() << " snapshots\n";
    return kExitOk;
}

int cmd_fields(const Common& c, std::ostream& out)
{
    Job job = load_job(c);
    const fs::path dir = prepare_out(c.out_dir);
    const auto fields = pipeline::prepare(job.input, job.cfg);
    io::write_file(dir / "g.png", io::encode_png(io::rescaled_image(*fields.g)));
    io::write_file(dir / "beta.png", io::encode_png(io::rescaled_image(fields.beta->field)));
    io::write_pfm(dir / "g.pfm", *fields.g);
    io::write_pfm(dir / "beta.pfm", fields.beta->field);
    io::write_file(dir / "edges.png", io::encode_png(io::mask_image(fields.stopping_set.mask)));
    io::write_file(dir / "all_edges.png", io::encode_png(io::mask_image(fields.all_edges.mask)));
    config::write_json_file(dir / "fields.json",
                            {{"theta1", fields.theta1},
                             {"theta2", fields.theta2},
                             {"separated", fields.separated},
                             {"detector_in_range", fields.detector_in_range},
                             {"g", {{"min", fields.g->min()}, {"max", fields.g->max()}}},
                             {"init_box", {fields.box.r0, fields.box.c0, fields.box.r1, fields.box.c1}}});
    out << "wrote fields to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& truth, const std::string& pred, std::optional<double> spacing,
                 const std::string& out_file, std::ostream& out)
{
    metrics::MaskPair pair = [&] {
        try {
            return metrics::MaskPair(io::read_mask(truth), io::read_mask(pred));
        }
        catch (const Error& e) {
            throw UsageError(e.what());
        }
    }();
    json doc = {{"dice", metrics::dice(pair)}, {"jaccard", metrics::jaccard(pair)}};
    try {
        doc["hd"] = metrics::hausdorff(pair, spacing);
        doc["assd"] = metrics::assd(pair, spacing);
    }
    catch (const ParameterError&) {
        doc["hd"] = nullptr;
        doc["assd"] = nullptr;
    }
    if (!out_file.empty())
        config::write_json_file(out_file, doc);
    out << doc.dump(2) << "\n";
    return kExitOk;
}

int cmd_phantom(const std::string& kind, const std::string& spec_path, const std::vector<std::string>& overrides,
                const std::string& out_dir, std::ostream& out)
{
    phantom::PhantomSpec spec;
    try {
        json doc = load_document(spec_path, overrides);
        if (!kind.empty())
            doc["kind"] = kind;
        spec = config::phantom_from_json(doc);
        spec.validate();
    }
    catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    const auto ph = phantom::make_phantom(spec);
    const fs::path dir = prepare_out(out_dir);
    io::write_file(dir / "image.png", io::encode_png(io::gray_image(ph.image)));
    io::write_file(dir / "truth.png", io::encode_png(io::mask_image(ph.truth)));
    config::write_json_file(dir / "phantom.json", config::to_json(spec));
    if (spec.kind == phantom::Kind::fractured_ring)
        config::write_json_file(dir / "prompts.json", config::to_json(phantom::suggested_fracture_prompt(spec)));
    out << "wrote " << phantom::to_string(spec.kind) << " phantom to " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bone segmentation with prompt-guided geodesic active contours", "figac"};
    app.require_subcommand(1);

    Common seg, evo, fld;
    int snapshot_every = 0;
    add_common(app.add_subcommand("segment", "Segment an image and write mask, contour and diagnostics"), seg);
    auto* evolve = app.add_subcommand("evolve", "Segment while writing contour snapshots");
    add_common(evolve, evo);
    evolve->add_option("--snapshot-every", snapshot_every, "Iterations between snapshots")
        ->required()
        ->check(CLI::PositiveNumber);
    add_common(app.add_subcommand("fields", "Write the edge-detector and distance fields"), fld);

    std::string truth, pred, eval_out;
    std::optional<double> spacing;
    auto* evaluate = app.add_subcommand("evaluate", "Compare two mask PNGs");
    evaluate->add_option("--truth", truth, "Ground-truth mask PNG")->required();
    evaluate->add_option("--pred", pred, "Predicted mask PNG")->required();
    evaluate->add_option("--spacing", spacing, "Pixel spacing for boundary distances");
    evaluate->add_option("--out", eval_out, "Also write the metrics to this JSON file");

    std::string kind, spec_path, ph_out;
    std::vector<std::string> ph_overrides;
    auto* ph = app.add_subcommand("phantom", "Generate a synthetic phantom and its ground truth");
    ph->add_option("--kind", kind, "ring, fractured_ring, ring_with_blob, annulus or two_disks");
    ph->add_option("--spec", spec_path, "Phantom specification JSON");
    ph->add_option("--set", ph_overrides, "Override a phantom field, e.g. noise_sigma=5");
    ph->add_option("--out", ph_out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("segment"))
            return cmd_segment(seg, out);
        if (app.got_subcommand("evolve"))
            return cmd_evolve(evo, snapshot_every, out);
        if (app.got_subcommand("fields"))
            return cmd_fields(fld, out);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(truth, pred, spacing, eval_out, out);
        return cmd_phantom(kind, spec_path, ph_overrides, ph_out, out);
    }
    catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    catch (const StageError& e) {
        err << "pipeline error in stage " << e.what() << "\n";
        return kExitRuntime;
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace figac::cli
