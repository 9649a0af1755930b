#include "figac/config.hpp"

#include <fstream>
#include <set>

#include "figac/levelset.hpp"

namespace figac::config {

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were consumed.
class Reader {
public:
    Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path))
    {
        if (!doc_.is_object())
            throw ConfigError(path_, "expected an object");
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number())
                throw ConfigError(join(path_, key), "expected a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& key, int& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer())
                throw ConfigError(join(path_, key), "expected an integer");
            out = v->get<int>();
        }
    }

    void boolean(const std::string& key, bool& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_boolean())
                throw ConfigError(join(path_, key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string())
                throw ConfigError(join(path_, key), "expected a string");
            out = v->get<std::string>();
        }
    }

    std::string child(const std::string& key) const { return join(path_, key); }

    void finish() const
    {
        for (const auto& [key, value] : doc_.items())
            if (!seen_.count(key))
                throw ConfigError(join(path_, key), "unknown field");
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

Pixel pixel_from_json(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ConfigError(path, "expected [row, col] integers");
    return {v[0].get<int>(), v[1].get<int>()};
}

json pixel_to_json(const Pixel& p) { return json::array({p.row, p.col}); }

template <class E>
E parse_enum(Reader& r, const std::string& key, E current, E (*from)(std::string_view))
{
    std::string name;
    r.string(key, name);
    if (name.empty())
        return current;
    try {
        return from(name);
    }
    catch (const ParameterError& e) {
        throw ConfigError(r.child(key), e.what());
    }
}

pipeline::Mode mode_from_string(std::string_view s)
{
    if (s == "figac")
        return pipeline::Mode::figac;
    if (s == "classical")
        return pipeline::Mode::classical;
    throw ParameterError("expected figac or classical, got '" + std::string(s) + "'");
}

}  // namespace

edges::PromptSet prompts_from_json(const json& doc, const std::string& path)
{
    Reader r(doc, path);
    edges::PromptSet out;
    if (const json* strokes = r.find("strokes")) {
        if (!strokes->is_array())
            throw ConfigError(join(path, "strokes"), "expected an array of strokes");
        for (std::size_t i = 0; i < strokes->size(); ++i) {
            const std::string spath = join(path, "strokes[" + std::to_string(i) + "]");
            const json& s = (*strokes)[i];
            if (!s.is_array() || s.empty())
                throw ConfigError(spath, "expected a non-empty array of [row, col] points");
            std::vector<Pixel> stroke;
            for (std::size_t k = 0; k < s.size(); ++k)
                stroke.push_back(pixel_from_json(s[k], spath + "[" + std::to_string(k) + "]"));
            out.strokes.push_back(std::move(stroke));
        }
    }
    r.finish();
    return out;
}

pipeline::PipelineConfig pipeline_from_json(const json& doc)
{
    pipeline::PipelineConfig cfg;
    Reader r(doc, "");
    cfg.mode = parse_enum(r, "mode", cfg.mode, &mode_from_string);

    if (const json* v = r.find("window")) {
        Reader w(*v, "window");
        w.number("width", cfg.window.width);
        w.number("level", cfg.window.level);
        w.finish();
    }
    if (const json* v = r.find("spec")) {
        Reader s(*v, "spec");
        s.number("w1", cfg.spec.w1);
        s.number("w2", cfg.spec.w2);
        s.number("l1", cfg.spec.l1);
        s.number("l2", cfg.spec.l2);
        s.number("S", cfg.spec.S);
        s.number("B", cfg.spec.B);
        s.finish();
    }
    if (const json* v = r.find("detector")) {
        Reader d(*v, "detector");
        d.number("eps1", cfg.detector.eps1);
        d.number("eps2", cfg.detector.eps2);
        d.number("delta1", cfg.detector.delta1);
        d.number("delta2", cfg.detector.delta2);
        d.number("gamma", cfg.detector.gamma);
        d.finish();
    }
    if (const json* v = r.find("classical_presmooth")) {
        if (v->is_null()) {
            cfg.classical_presmooth.reset();
        }
        else {
            Reader p(*v, "classical_presmooth");
            knowledge::Presmooth ps;
            p.integer("size", ps.size);
            p.number("sigma", ps.sigma);
            p.finish();
            cfg.classical_presmooth = ps;
        }
    }
    if (const json* v = r.find("canny")) {
        Reader c(*v, "canny");
        c.number("low", cfg.canny.low);
        c.number("high", cfg.canny.high);
        c.integer("smooth_size", cfg.canny.smooth_size);
        c.number("smooth_sigma", cfg.canny.smooth_sigma);
        c.finish();
    }
    r.number("eta", cfg.eta);
    r.integer("kernel_size", cfg.kernel_size);
    if (const json* v = r.find("evolution")) {
        Reader e(*v, "evolution");
        e.number("alpha", cfg.evolution.alpha);
        e.number("h", cfg.evolution.h);
        e.number("epsilon", cfg.evolution.epsilon);
        e.integer("n_iters", cfg.evolution.n_iters);
        e.integer("reinit_every", cfg.evolution.reinit_every);
        cfg.evolution.speed_factor =
            parse_enum(e, "speed_factor", cfg.evolution.speed_factor, &levelset::speed_factor_from_string);
        e.finish();
    }
    if (const json* v = r.find("init_box")) {
        if (v->is_null()) {
            cfg.init_box.reset();
        }
        else {
            if (!v->is_array() || v->size() != 4)
                throw ConfigError("init_box", "expected [r0, c0, r1, c1] or null");
            for (const auto& x : *v)
                if (!x.is_number_integer())
                    throw ConfigError("init_box", "expected integers");
            cfg.init_box = levelset::Box{(*v)[0].get<int>(), (*v)[1].get<int>(), (*v)[2].get<int>(),
                                         (*v)[3].get<int>()};
        }
    }
    if (const json* v = r.find("init")) {
        Reader i(*v, "init");
        if (const json* t = i.find("intensity_thresh")) {
            if (t->is_null())
                cfg.init.intensity_thresh.reset();
            else if (t->is_number())
                cfg.init.intensity_thresh = t->get<double>();
            else
                throw ConfigError("init.intensity_thresh", "expected a number or null");
        }
        i.integer("margin", cfg.init.margin);
        i.finish();
    }
    if (const json* v = r.find("prompts"))
        cfg.prompts = prompts_from_json(*v, "prompts");
    if (const json* v = r.find("postprocess")) {
        Reader p(*v, "postprocess");
        p.boolean("inner_holes", cfg.postprocess.inner_holes);
        p.boolean("narrow_gaps", cfg.postprocess.narrow_gaps);
        if (const json* seeds = p.find("gap_seeds")) {
            if (!seeds->is_array())
                throw ConfigError("postprocess.gap_seeds", "expected an array of [row, col] points");
            cfg.postprocess.gap_seeds.clear();
            for (std::size_t k = 0; k < seeds->size(); ++k)
                cfg.postprocess.gap_seeds.push_back(
                    pixel_from_json((*seeds)[k], "postprocess.gap_seeds[" + std::to_string(k) + "]"));
        }
        p.number("gap_tol", cfg.postprocess.gap_tol);
        p.number("hole_alpha", cfg.postprocess.hole_alpha);
        p.integer("hole_iters", cfg.postprocess.hole_iters);
        p.number("hole_seed_radius", cfg.postprocess.hole_seed_radius);
        p.finish();
    }
    if (const json* v = r.find("stopping")) {
        Reader s(*v, "stopping");
        s.boolean("plateau", cfg.stopping.plateau);
        s.integer("window", cfg.stopping.window);
        s.number("tol", cfg.stopping.tol);
        s.finish();
    }
    r.integer("snapshot_every", cfg.snapshot_every);
    r.finish();
    return cfg;
}

phantom::PhantomSpec phantom_from_json(const json& doc)
{
    phantom::PhantomSpec s;
    Reader r(doc, "");
    s.kind = parse_enum(r, "kind", s.kind, &phantom::kind_from_string);
    r.integer("size", s.size);
    r.number("outer_radius", s.outer_radius);
    r.number("inner_radius", s.inner_radius);
    r.number("gap_degrees", s.gap_degrees);
    r.number("gap_center_degrees", s.gap_center_degrees);
    r.number("blob_radius", s.blob_radius);
    r.number("blob_distance", s.blob_distance);
    r.number("blob_angle_degrees", s.blob_angle_degrees);
    r.number("blob_gray", s.blob_gray);
    r.number("hole_gray", s.hole_gray);
    r.number("bone_gray_min", s.bone_gray_min);
    r.number("disk_radius", s.disk_radius);
    r.number("disk_separation", s.disk_separation);
    r.integer("channel_width", s.channel_width);
    r.number("background_gray", s.background_gray);
    r.number("cortical_gray", s.cortical_gray);
    r.number("interior_gray", s.interior_gray);
    r.number("noise_sigma", s.noise_sigma);
    if (const json* v = r.find("seed")) {
        if (!v->is_number_unsigned())
            throw ConfigError("seed", "expected a non-negative integer");
        s.seed = v->get<std::uint32_t>();
    }
    r.finish();
    return s;
}

json to_json(const edges::PromptSet& prompts)
{
    json strokes = json::array();
    for (const auto& stroke : prompts.strokes) {
        json s = json::array();
        for (const Pixel& p : stroke)
            s.push_back(pixel_to_json(p));
        strokes.push_back(std::move(s));
    }
    return {{"strokes", std::move(strokes)}};
}

json to_json(const pipeline::PipelineConfig& cfg)
{
    json seeds = json::array();
    for (const Pixel& p : cfg.postprocess.gap_seeds)
        seeds.push_back(pixel_to_json(p));
    json presmooth = nullptr;
    if (cfg.classical_presmooth)
        presmooth = {{"size", cfg.classical_presmooth->size}, {"sigma", cfg.classical_presmooth->sigma}};
    json box = nullptr;
    if (cfg.init_box)
        box = {cfg.init_box->r0, cfg.init_box->c0, cfg.init_box->r1, cfg.init_box->c1};
    return {
        {"mode", cfg.mode == pipeline::Mode::figac ? "figac" : "classical"},
        {"window", {{"width", cfg.window.width}, {"level", cfg.window.level}}},
        {"spec",
         {{"w1", cfg.spec.w1}, {"w2", cfg.spec.w2}, {"l1", cfg.spec.l1}, {"l2", cfg.spec.l2}, {"S", cfg.spec.S},
          {"B", cfg.spec.B}}},
        {"detector",
         {{"eps1", cfg.detector.eps1},
          {"eps2", cfg.detector.eps2},
          {"delta1", cfg.detector.delta1},
          {"delta2", cfg.detector.delta2},
          {"gamma", cfg.detector.gamma}}},
        {"classical_presmooth", presmooth},
        {"canny",
         {{"low", cfg.canny.low},
          {"high", cfg.canny.high},
          {"smooth_size", cfg.canny.smooth_size},
          {"smooth_sigma", cfg.canny.smooth_sigma}}},
        {"eta", cfg.eta},
        {"kernel_size", cfg.kernel_size},
        {"evolution",
         {{"alpha", cfg.evolution.alpha},
          {"h", cfg.evolution.h},
          {"epsilon", cfg.evolution.epsilon},
          {"n_iters", cfg.evolution.n_iters},
          {"reinit_every", cfg.evolution.reinit_every},
          {"speed_factor", levelset::to_string(cfg.evolution.speed_factor)}}},
        {"init_box", box},
        {"init",
         {{"intensity_thresh", cfg.init.intensity_thresh ? json(*cfg.init.intensity_thresh) : json(nullptr)},
          {"margin", cfg.init.margin}}},
        {"prompts", to_json(cfg.prompts)},
        {"postprocess",
         {{"inner_holes", cfg.postprocess.inner_holes},
          {"narrow_gaps", cfg.postprocess.narrow_gaps},
          {"gap_seeds", seeds},
          {"gap_tol", cfg.postprocess.gap_tol},
          {"hole_alpha", cfg.postprocess.hole_alpha},
          {"hole_iters", cfg.postprocess.hole_iters},
          {"hole_seed_radius", cfg.postprocess.hole_seed_radius}}},
        {"stopping",
         {{"plateau", cfg.stopping.plateau}, {"window", cfg.stopping.window}, {"tol", cfg.stopping.tol}}},
        {"snapshot_every", cfg.snapshot_every},
    };
}

json to_json(const phantom::PhantomSpec& s)
{
    return {
        {"kind", phantom::to_string(s.kind)},
        {"size", s.size},
        {"outer_radius", s.outer_radius},
        {"inner_radius", s.inner_radius},
        {"gap_degrees", s.gap_degrees},
        {"gap_center_degrees", s.gap_center_degrees},
        {"blob_radius", s.blob_radius},
        {"blob_distance", s.blob_distance},
        {"blob_angle_degrees", s.blob_angle_degrees},
        {"blob_gray", s.blob_gray},
        {"hole_gray", s.hole_gray},
        {"bone_gray_min", s.bone_gray_min},
        {"disk_radius", s.disk_radius},
        {"disk_separation", s.disk_separation},
        {"channel_width", s.channel_width},
        {"background_gray", s.background_gray},
        {"cortical_gray", s.cortical_gray},
        {"interior_gray", s.interior_gray},
        {"noise_sigma", s.noise_sigma},
        {"seed", s.seed},
    };
}

json to_json(const std::vector<levelset::Polyline>& contour)
{
    json lines = json::array();
    for (const auto& line : contour) {
        json pts = json::array();
        for (const auto& p : line)
            pts.push_back({p.row, p.col});
        lines.push_back(std::move(pts));
    }
    return lines;
}

void apply_override(json& doc, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("", "override '" + std::string(assignment) + "' must have the form key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    std::string pointer;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw ConfigError(key, "empty path component in override");
        pointer += "/" + part;
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    if (!doc.is_object())
        doc = json::object();
    try {
        doc[json::json_pointer(pointer)] = std::move(value);
    }
    catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("", path.string() + " is not valid JSON");
    return doc;
}

void write_json_file(const std::filesystem::path& path, const json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out)
        throw IoError("cannot write " + path.string());
}

}  // namespace figac::config
