#include "figac/service.hpp"

#include <atomic>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include <httplib.h>

#include "figac/config.hpp"
#include "figac/image_io.hpp"
#include "figac/pipeline.hpp"

namespace figac::service {

namespace fs = std::filesystem;
using config::json;

namespace {

enum class JobState { created, fields_ready, running, paused, converged, failed };

const char* to_string(JobState s)
{
    switch (s) {
    case JobState::created: return "created";
    case JobState::fields_ready: return "fields_ready";
    case JobState::running: return "running";
    case JobState::paused: return "paused";
    case JobState::converged: return "converged";
    case JobState::failed: return "failed";
    }
    return "failed";
}

JobState state_from_string(const std::string& s)
{
    for (JobState k : {JobState::created, JobState::fields_ready, JobState::running, JobState::paused,
                       JobState::converged, JobState::failed})
        if (s == to_string(k))
            return k;
    throw IoError("unknown job state '" + s + "'");
}

// Error carrying the HTTP status it should be reported with.
class HttpError : public Error {
public:
    HttpError(int status, const std::string& what, std::string field = {})
        : Error(what), status_(status), field_(std::move(field)) {}
    int status() const noexcept { return status_; }
    const std::string& field() const noexcept { return field_; }

private:
    int status_;
    std::string field_;
};

struct Slice {
    std::string id;
    pipeline::InputImage input;
    ScalarField windowed_default;  ///< for previews only
};

// Latest completed iteration, published by the worker and read without the job lock.
struct Published {
    int iter = 0;
    std::shared_ptr<const ScalarField> phi;
};

struct Job {
    std::string id;
    std::string slice_id;
    pipeline::PipelineConfig cfg;

    std::mutex mutex;  // serializes mutations; guards everything below except the published data
    std::condition_variable_any idle;
    JobState state = JobState::created;
    std::string error;
    std::optional<pipeline::PreparedFields> fields;
    levelset::EvolutionState evo;  // owned by the worker while running
    std::optional<pipeline::PlateauDetector> plateau;
    std::optional<Mask> final_mask;
    int field_version = 0;
    std::thread worker;
    std::atomic<bool> pause_requested{false};

    std::mutex snap_mutex;
    std::shared_ptr<const Published> latest;
    std::map<int, std::vector<levelset::Polyline>> snapshots;

    void publish(const levelset::EvolutionState& s)
    {
        auto p = std::make_shared<Published>();
        p->iter = s.iter;
        p->phi = std::make_shared<const ScalarField>(s.phi);
        std::lock_guard lock(snap_mutex);
        latest = std::move(p);
    }

    std::shared_ptr<const Published> snapshot()
    {
        std::lock_guard lock(snap_mutex);
        return latest;
    }
};

std::string new_id(std::mt19937_64& rng)
{
    static constexpr char hex[] = "0123456789abcdef";
    std::uint64_t v = rng();
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        out[i] = hex[v & 0xf];
    return out;
}

void write_atomically(const fs::path& path, const std::string& bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    io::write_file(tmp, bytes);
    fs::rename(tmp, path);
}

json body_json(const httplib::Request& req)
{
    if (req.body.empty())
        return json::object();
    json doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded())
        throw HttpError(422, "request body is not valid JSON");
    return doc;
}

void send_json(httplib::Response& res, const json& doc, int status = 200)
{
    res.status = status;
    res.set_content(doc.dump(), "application/json");
}

void send_png(httplib::Response& res, const std::string& bytes)
{
    res.status = 200;
    res.set_content(bytes, "image/png");
}

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    httplib::Server http;

    std::mutex store_mutex;
    std::map<std::string, std::shared_ptr<const Slice>> slices;
    std::map<std::string, std::shared_ptr<Job>> jobs;
    std::mt19937_64 rng{std::random_device{}()};

    explicit Impl(ServiceOptions opts) : options(std::move(opts))
    {
        fs::create_directories(options.data_dir / "slices");
        fs::create_directories(options.data_dir / "jobs");
        load_store();
        routes();
    }

    ~Impl()
    {
        std::vector<std::shared_ptr<Job>> all;
        {
            std::lock_guard lock(store_mutex);
            for (auto& [id, job] : jobs)
                all.push_back(job);
        }
        for (auto& job : all) {
            job->pause_requested = true;
            if (job->worker.joinable())
                job->worker.join();
        }
    }

    // ---- lookup -------------------------------------------------------------

    std::shared_ptr<const Slice> find_slice(const std::string& id)
    {
        std::lock_guard lock(store_mutex);
        auto it = slices.find(id);
        if (it == slices.end())
            throw HttpError(404, "unknown slice " + id);
        return it->second;
    }

    std::shared_ptr<Job> find_job(const std::string& id)
    {
        std::lock_guard lock(store_mutex);
        auto it = jobs.find(id);
        if (it == jobs.end())
            throw HttpError(404, "unknown job " + id);
        return it->second;
    }

    fs::path job_dir(const Job& job) const { return options.data_dir / "jobs" / job.id; }

    // ---- persistence ----------------------------------------------------------

    // Caller holds job.mutex.
    void persist(Job& job)
    {
        const fs::path dir = job_dir(job);
        fs::create_directories(dir / "snapshots");
        json doc = {{"id", job.id},
                    {"slice_id", job.slice_id},
                    {"config", config::to_json(job.cfg)},
                    {"state", to_string(job.state)},
                    {"iter", job.evo.iter},
                    {"field_version", job.field_version},
                    {"error", job.error}};
        if (job.fields)
            write_atomically(dir / "phi.f64", io::encode_raster(job.evo.phi));
        write_atomically(dir / "job.json", doc.dump(2) + "\n");
        std::lock_guard lock(job.snap_mutex);
        for (const auto& [iter, contour] : job.snapshots) {
            const fs::path p = dir / "snapshots" / (std::to_string(iter) + ".json");
            if (!fs::exists(p))
                write_atomically(p, json{{"iter", iter}, {"polylines", config::to_json(contour)}}.dump() + "\n");
        }
    }

    void load_store()
    {
        for (const auto& entry : fs::directory_iterator(options.data_dir / "slices")) {
            if (entry.path().extension() != ".png")
                continue;
            const std::string id = entry.path().stem().string();
            json sidecar = json::object();
            fs::path side = entry.path();
            side.replace_extension(".json");
            if (fs::exists(side))
                sidecar = json::parse(io::read_file(side));
            add_slice(id, io::to_input(io::read_png(entry.path()), sidecar));
        }
        for (const auto& entry : fs::directory_iterator(options.data_dir / "jobs")) {
            const fs::path meta = entry.path() / "job.json";
            if (!fs::exists(meta))
                continue;
            const json doc = json::parse(io::read_file(meta));
            auto job = std::make_shared<Job>();
            job->id = doc.at("id").get<std::string>();
            job->slice_id = doc.at("slice_id").get<std::string>();
            job->cfg = config::pipeline_from_json(doc.at("config"));
            job->state = state_from_string(doc.at("state").get<std::string>());
            job->field_version = doc.at("field_version").get<int>();
            job->error = doc.value("error", "");
            if (job->state == JobState::running)
                job->state = JobState::paused;
            if (job->state != JobState::created && job->state != JobState::failed) {
                try {
                    auto slice = slices.find(job->slice_id);
                    if (slice == slices.end())
                        throw IoError("slice " + job->slice_id + " is missing from the store");
                    job->fields = pipeline::prepare(slice->second->input, job->cfg);
                    job->evo = pipeline::initial_state(*job->fields, job->cfg);
                    job->evo.phi = io::decode_raster(io::read_file(entry.path() / "phi.f64"));
                    job->evo.iter = doc.at("iter").get<int>();
                    job->evo.validate();
                    job->plateau.emplace(job->cfg.stopping);
                    if (job->state == JobState::converged)
                        job->final_mask = pipeline::finalize(job->evo, *job->fields, job->cfg).mask;
                    job->publish(job->evo);
                }
                catch (const Error& e) {
                    job->fields.reset();
                    job->state = JobState::failed;
                    job->error = std::string("restore: ") + e.what();
                }
            }
            const fs::path snaps = entry.path() / "snapshots";
            if (fs::exists(snaps)) {
                for (const auto& s : fs::directory_iterator(snaps)) {
                    const json sj = json::parse(io::read_file(s.path()));
                    std::vector<levelset::Polyline> lines;
                    for (const auto& line : sj.at("polylines")) {
                        levelset::Polyline pl;
                        for (const auto& p : line)
                            pl.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                        lines.push_back(std::move(pl));
                    }
                    job->snapshots[sj.at("iter").get<int>()] = std::move(lines);
                }
            }
            jobs[job->id] = job;
        }
    }

    void add_slice(const std::string& id, pipeline::InputImage input)
    {
        auto slice = std::make_shared<Slice>();
        slice->id = id;
        slice->windowed_default = pipeline::windowed(input, pipeline::PipelineConfig{});
        slice->input = std::move(input);
        slices[id] = std::move(slice);
    }

    // ---- job operations -----------------------------------------------------

    json describe(Job& job)
    {
        const auto snap = job.snapshot();
        json doc = {{"id", job.id},
                    {"slice_id", job.slice_id},
                    {"state", to_string(job.state)},
                    {"iter", snap ? snap->iter : 0},
                    {"n_iters", job.cfg.evolution.n_iters},
                    {"field_version", job.field_version},
                    {"prompts", config::to_json(job.cfg.prompts)},
                    {"config", config::to_json(job.cfg)}};
        if (!job.error.empty())
            doc["error"] = job.error;
        if (job.fields) {
            const auto& b = job.fields->box;
            doc["init_box"] = {b.r0, b.c0, b.r1, b.c1};
            doc["width"] = job.fields->image.width();
            doc["height"] = job.fields->image.height();
        }
        return doc;
    }

    static pipeline::PipelineConfig parse_config(const json& doc, int width, int height)
    {
        try {
            pipeline::PipelineConfig cfg = config::pipeline_from_json(doc);
            cfg.validate();
            edges::validate_prompts(cfg.prompts, width, height);
            if (cfg.init_box)
                levelset::validate_box(*cfg.init_box, width, height);
            return cfg;
        }
        catch (const config::ConfigError& e) {
            throw HttpError(422, e.what(), e.field());
        }
        catch (const ParameterError& e) {
            throw HttpError(422, e.what());
        }
    }

    json create_job(const json& body)
    {
        if (!body.is_object() || !body.contains("slice_id") || !body["slice_id"].is_string())
            throw HttpError(422, "slice_id is required", "slice_id");
        for (const auto& [key, value] : body.items())
            if (key != "slice_id" && key != "config")
                throw HttpError(422, "unknown field", key);
        const auto slice = find_slice(body["slice_id"].get<std::string>());
        const ScalarField& img = slice->windowed_default;
        auto job = std::make_shared<Job>();
        job->slice_id = slice->id;
        job->cfg = parse_config(body.value("config", json::object()), img.width(), img.height());
        {
            std::lock_guard lock(store_mutex);
            job->id = new_id(rng);
            jobs[job->id] = job;
        }

        std::lock_guard lock(job->mutex);
        persist(*job);
        try {
            job->fields = pipeline::prepare(slice->input, job->cfg);
            job->evo = pipeline::initial_state(*job->fields, job->cfg);
            job->plateau.emplace(job->cfg.stopping);
            job->state = JobState::fields_ready;
            job->field_version = 1;
            job->publish(job->evo);
        }
        catch (const Error& e) {
            job->fields.reset();
            job->state = JobState::failed;
            job->error = e.what();
        }
        persist(*job);
        return describe(*job);
    }

    json set_prompts(Job& job, const json& body, bool replace)
    {
        std::lock_guard lock(job.mutex);
        if (job.state != JobState::created && job.state != JobState::fields_ready &&
            job.state != JobState::paused)
            throw HttpError(409, std::string("prompts cannot change while the job is ") + to_string(job.state));
        if (!job.fields)
            throw HttpError(409, "job has no fields");
        edges::PromptSet added;
        try {
            added = config::prompts_from_json(body);
            edges::validate_prompts(added, job.fields->image.width(), job.fields->image.height());
        }
        catch (const config::ConfigError& e) {
            throw HttpError(422, e.what(), e.field());
        }
        catch (const ParameterError& e) {
            throw HttpError(422, e.what(), "strokes");
        }
        edges::PromptSet next = replace ? edges::PromptSet{} : job.cfg.prompts;
        next.strokes.insert(next.strokes.end(), added.strokes.begin(), added.strokes.end());
        try {
            pipeline::apply_prompts(*job.fields, next);
        }
        catch (const Error& e) {
            throw HttpError(422, e.what(), "strokes");
        }
        job.cfg.prompts = std::move(next);
        if (job.cfg.mode == pipeline::Mode::figac)
            job.evo.beta = job.fields->beta;
        job.state = JobState::fields_ready;
        ++job.field_version;
        persist(job);
        return describe(job);
    }

    json start_run(const std::shared_ptr<Job>& job, const json& body)
    {
        std::lock_guard lock(job->mutex);
        if (job->state != JobState::fields_ready && job->state != JobState::paused)
            throw HttpError(409, std::string("cannot run a job that is ") + to_string(job->state));
        int iters = std::max(0, job->cfg.evolution.n_iters - job->evo.iter);
        if (body.contains("iters")) {
            if (!body["iters"].is_number_integer() || body["iters"].get<int>() < 0)
                throw HttpError(422, "expected a non-negative integer", "iters");
            iters = body["iters"].get<int>();
        }
        for (const auto& [key, value] : body.items())
            if (key != "iters")
                throw HttpError(422, "unknown field", key);
        if (job->worker.joinable())
            job->worker.join();  // previous run already left the running state
        job->state = JobState::running;
        job->pause_requested = false;
        persist(*job);
        const int target = job->evo.iter + iters;
        job->worker = std::thread([this, job, target] { work(job, target); });
        return describe(*job);
    }

    void work(const std::shared_ptr<Job>& job, int target)
    {
        levelset::EvolutionState local = job->evo;
        const pipeline::PipelineConfig& cfg = job->cfg;
        bool settled = false;
        std::string failure;
        try {
            while (local.iter < target && !job->pause_requested) {
                pipeline::advance(local, cfg.mode);
                job->publish(local);
                if (cfg.snapshot_every > 0 && local.iter % cfg.snapshot_every == 0) {
                    auto contour = levelset::extract_contour(local.phi);
                    std::lock_guard lock(job->snap_mutex);
                    job->snapshots[local.iter] = std::move(contour);
                }
                if (cfg.stopping.plateau && job->plateau->update(local)) {
                    settled = true;
                    break;
                }
            }
        }
        catch (const std::exception& e) {
            failure = std::string("evolution: ") + e.what();
        }

        std::lock_guard lock(job->mutex);
        job->evo = std::move(local);
        if (!failure.empty()) {
            job->state = JobState::failed;
            job->error = failure;
        }
        else if (settled || job->evo.iter >= cfg.evolution.n_iters) {
            try {
                job->final_mask = pipeline::finalize(job->evo, *job->fields, cfg).mask;
                job->state = JobState::converged;
            }
            catch (const std::exception& e) {
                job->state = JobState::failed;
                job->error = e.what();
            }
        }
        else {
            job->state = JobState::paused;
        }
        persist(*job);
        job->idle.notify_all();
    }

    json pause(Job& job)
    {
        std::unique_lock lock(job.mutex);
        if (job.state != JobState::running)
            throw HttpError(409, std::string("cannot pause a job that is ") + to_string(job.state));
        job.pause_requested = true;
        job.idle.wait(lock, [&] { return job.state != JobState::running; });
        return describe(job);
    }

    json contour(Job& job, const std::string& which)
    {
        if (which.empty() || which == "latest") {
            const auto snap = job.snapshot();
            if (!snap)
                throw HttpError(409, "job has no level set yet");
            return {{"iter", snap->iter}, {"polylines", config::to_json(levelset::extract_contour(*snap->phi))}};
        }
        int iter = 0;
        try {
            std::size_t used = 0;
            iter = std::stoi(which, &used);
            if (used != which.size())
                throw std::invalid_argument(which);
        }
        catch (const std::exception&) {
            throw HttpError(422, "iter must be an integer or 'latest'", "iter");
        }
        {
            std::lock_guard lock(job.snap_mutex);
            auto it = job.snapshots.find(iter);
            if (it != job.snapshots.end())
                return {{"iter", iter}, {"polylines", config::to_json(it->second)}};
        }
        const auto snap = job.snapshot();
        if (snap && snap->iter == iter)
            return {{"iter", snap->iter}, {"polylines", config::to_json(levelset::extract_contour(*snap->phi))}};
        throw HttpError(404, "no snapshot recorded at iteration " + std::to_string(iter));
    }

    std::string mask_png(Job& job)
    {
        {
            std::lock_guard lock(job.mutex);
            if (job.state == JobState::converged && job.final_mask)
                return io::encode_png(io::mask_image(*job.final_mask));
        }
        const auto snap = job.snapshot();
        if (!snap)
            throw HttpError(409, "job has no level set yet");
        return io::encode_png(io::mask_image(levelset::extract_mask(*snap->phi)));
    }

    std::string field_png(Job& job, const std::string& name)
    {
        std::lock_guard lock(job.mutex);
        if (!job.fields)
            throw HttpError(409, "fields are not available for this job");
        if (name == "g")
            return io::encode_png(io::rescaled_image(*job.fields->g));
        if (name == "beta")
            return io::encode_png(io::rescaled_image(job.fields->beta->field));
        throw HttpError(404, "unknown field " + name);
    }

    json upload_slice(const httplib::Request& req)
    {
        std::string bytes = req.body;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("file"))
                throw HttpError(422, "multipart upload needs a 'file' part", "file");
            bytes = req.get_file_value("file").content;
        }
        json sidecar = json::object();
        for (const char* key : {"hu_offset", "pixel_spacing"}) {
            if (!req.has_param(key))
                continue;
            const json v = json::parse(req.get_param_value(key), nullptr, false);
            if (!v.is_number())
                throw HttpError(422, "expected a number", key);
            sidecar[key] = v;
        }

        io::GrayImage png;
        pipeline::InputImage input;
        try {
            png = io::decode_png(bytes);
            input = io::to_input(png, sidecar);
        }
        catch (const Error& e) {
            throw HttpError(422, e.what(), "file");
        }
        std::string id;
        {
            std::lock_guard lock(store_mutex);
            id = new_id(rng);
            write_atomically(options.data_dir / "slices" / (id + ".png"), bytes);
            if (png.bit_depth == 16)
                write_atomically(options.data_dir / "slices" / (id + ".json"), sidecar.dump() + "\n");
            add_slice(id, std::move(input));
        }
        return {{"slice_id", id},
                {"width", png.samples.width()},
                {"height", png.samples.height()},
                {"bit_depth", png.bit_depth}};
    }

    // ---- routing ------------------------------------------------------------

    template <class F>
    static httplib::Server::Handler guarded(F&& f)
    {
        return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            }
            catch (const HttpError& e) {
                json doc = {{"error", e.what()}};
                if (!e.field().empty())
                    doc["field"] = e.field();
                send_json(res, doc, e.status());
            }
            catch (const std::exception& e) {
                send_json(res, {{"error", e.what()}}, 500);
            }
        };
    }

    void routes()
    {
        http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
        http.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        http.Post("/slices", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, upload_slice(req), 201);
        }));
        http.Get(R"(/slices/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_png(res, io::encode_png(io::gray_image(find_slice(req.matches[1])->windowed_default)));
        }));
        http.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, create_job(body_json(req)), 201);
        }));
        http.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto job = find_job(req.matches[1]);
            std::lock_guard lock(job->mutex);
            send_json(res, describe(*job));
        }));
        http.Post(R"(/jobs/([^/]+)/prompts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const bool replace = req.has_param("replace") && req.get_param_value("replace") == "true";
            send_json(res, set_prompts(*find_job(req.matches[1]), body_json(req), replace));
        }));
        http.Post(R"(/jobs/([^/]+)/run)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, start_run(find_job(req.matches[1]), body_json(req)), 202);
        }));
        http.Post(R"(/jobs/([^/]+)/pause)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, pause(*find_job(req.matches[1])));
        }));
        http.Get(R"(/jobs/([^/]+)/contour)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, contour(*find_job(req.matches[1]), req.get_param_value("iter")));
        }));
        http.Get(R"(/jobs/([^/]+)/mask)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_png(res, mask_png(*find_job(req.matches[1])));
        }));
        http.Get(R"(/jobs/([^/]+)/fields/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send_png(res, field_png(*find_job(req.matches[1]), req.matches[2]));
                 }));
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service()
{
    stop();
}

bool Service::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Service::stop()
{
    if (impl_)
        impl_->http.stop();
}

}  // namespace figac::service
