#include "zipr/service.hpp"

#include "zipr/generators.hpp"
#include "zipr/obj_io.hpp"
#include "zipr/pipeline.hpp"

#include "httplib.h"

#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace zipr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Session {
  std::string id;
  fs::path dir;
  std::mutex run;  // held while a stage executes
  std::mutex state_mu;
  std::string job = "idle";  // idle | running | done | failed
  std::string job_stage;
  int iteration = 0;
  double energy = 0.0;
  json result;
  json error;
  std::thread worker;
};

int status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "stage_order" || code == "busy" || code == "stale") return 409;
  if (code == "io") return 500;
  return 422;
}

void send_json(httplib::Response& res, int status, const json& j) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
  send_json(res, status_for(code), {{"error", {{"code", code}, {"message", message}}}});
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nullptr;
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error("bad_json", std::string("request body is not JSON: ") + e.what());
  }
}

const std::set<std::string> kArtifacts = {
    project::kMesh,          project::kSeg,          project::kSpec,          project::kCharts,
    project::kCurve,         project::kCurveObj,     project::kRibbon,        project::kFlat,
    project::kPlanSvg,       project::kPlanDxf,      project::kDecompReport,  project::kSolverReport,
    project::kQualityReport, project::kRibbonData,   project::kRibbonReport,  project::kPlanReport};

std::string content_type(const std::string& name) {
  if (name.size() > 5 && name.substr(name.size() - 5) == ".json") return "application/json";
  if (name.size() > 4 && name.substr(name.size() - 4) == ".svg") return "image/svg+xml";
  if (name.size() > 4 && name.substr(name.size() - 4) == ".dxf") return "application/dxf";
  return "text/plain";
}

}  // namespace

struct DesignService::Impl {
  fs::path data;
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  int counter = 0;

  fs::path sessions_dir() const { return data / "sessions"; }

  std::shared_ptr<Session> create() {
    std::lock_guard<std::mutex> lock(mu);
    std::string id;
    do {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%06d", ++counter);
      id = buf;
    } while (sessions.count(id) || fs::exists(sessions_dir() / id));
    auto s = std::make_shared<Session>();
    s->id = id;
    s->dir = sessions_dir() / id;
    fs::create_directories(s->dir);
    sessions[id] = s;
    return s;
  }

  // In memory, or restored from its directory.
  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = sessions.find(id);
    if (it != sessions.end()) return it->second;
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos || !fs::is_directory(sessions_dir() / id))
      throw Error("not_found", "unknown session '" + id + "'");
    auto s = std::make_shared<Session>();
    s->id = id;
    s->dir = sessions_dir() / id;
    sessions[id] = s;
    return s;
  }

  json status(Session& s) {
    std::lock_guard<std::mutex> lock(s.state_mu);
    json j;
    j["id"] = s.id;
    j["job"] = {{"state", s.job}, {"stage", s.job_stage}, {"iteration", s.iteration}, {"energy", s.energy}};
    if (!s.result.is_null()) j["job"]["result"] = s.result;
    if (!s.error.is_null()) j["job"]["error"] = s.error;
    j["artifacts"] = project::artifact_status(s.dir);
    j["segmentation"] = fs::exists(s.dir / project::kSeg);
    j["spec"] = fs::exists(s.dir / project::kSpec);
    return j;
  }

  // Runs a synchronous stage under the session's single-writer lock.
  template <class F>
  void stage(const httplib::Request& req, httplib::Response& res, F&& body) {
    try {
      auto s = find(req.matches[1]);
      std::unique_lock<std::mutex> lock(s->run, std::try_to_lock);
      if (!lock.owns_lock()) throw Error("busy", "a pipeline stage is already running in this session");
      body(*s, req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, "internal", e.what());
    }
  }

  void routes() {
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        SurfaceMesh mesh;
        std::optional<Segmentation> seg;
        const bool is_json = req.get_header_value("Content-Type").find("json") != std::string::npos;
        if (is_json) {
          const json j = body_json(req);
          if (j.is_object() && j.contains("fixture")) {
            Fixture fx = make_fixture(j["fixture"].get<std::string>());
            mesh = std::move(fx.mesh);
            seg = fx.seg;
          } else if (j.is_object() && j.contains("obj")) {
            std::istringstream in(j["obj"].get<std::string>());
            mesh = parse_obj(in);
          } else {
            throw Error("bad_request", "expected {\"obj\": ...} or {\"fixture\": ...}");
          }
          if (j.contains("segmentation")) seg = segmentation_from_json(j["segmentation"]);
        } else {
          std::istringstream in(req.body);
          mesh = parse_obj(in);
        }
        json out;
        out["mesh"] = check_mesh(mesh);
        if (seg) out["decomposition"] = decomposition_summary(apply_segmentation(mesh, *seg));
        auto s = create();
        std::ostringstream o;
        write_obj(o, mesh.positions(), mesh.faces());
        write_text(s->dir / project::kMesh, o.str());
        if (seg) run_decompose(s->dir, mesh, *seg);
        out["id"] = s->id;
        send_json(res, 201, out);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, "bad_request", e.what());
      }
    });

    auto get_status = [this](const httplib::Request& req, httplib::Response& res) {
      try {
        send_json(res, 200, status(*find(req.matches[1])));
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      }
    };
    server.Get(R"(/sessions/([^/]+))", get_status);
    server.Get(R"(/sessions/([^/]+)/status)", get_status);

    server.Get(R"(/sessions/([^/]+)/mesh)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request&, httplib::Response& r) {
        const SurfaceMesh m = load_mesh((s.dir / project::kMesh).string());
        send_json(r, 200, mesh_arrays(m.positions(), m.faces()));
      });
    });

    server.Put(R"(/sessions/([^/]+)/segmentation)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request& q, httplib::Response& r) {
        const Segmentation seg = segmentation_from_json(body_json(q));
        const SurfaceMesh m = load_mesh((s.dir / project::kMesh).string());
        send_json(r, 200, run_decompose(s.dir, m, seg));
      });
    });

    server.Post(R"(/sessions/([^/]+)/parameterize)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [this](Session& s, const httplib::Request& q, httplib::Response& r) {
        const json cfg = body_json(q);
        // the stage lock is released before the worker takes it over
        start_param_unlocked(s, cfg);
        send_json(r, 202, status(s));
      });
    });

    server.Put(R"(/sessions/([^/]+)/spiral)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request& q, httplib::Response& r) {
        const json j = body_json(q);
        const SpiralSpec spec = spiral_spec_from_json(j.is_null() ? json::object() : j);
        send_json(r, 200, run_spiral(s.dir, spec));
      });
    });

    server.Post(R"(/sessions/([^/]+)/ribbon)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request& q, httplib::Response& r) {
        const json j = body_json(q);
        RibbonConfig cfg;
        if (j.is_object()) {
          cfg.samples_per_period = j.value("samples_per_period", cfg.samples_per_period);
          cfg.exact_polygon_limit = j.value("exact_polygon_limit", cfg.exact_polygon_limit);
        }
        send_json(r, 200, run_ribbon(s.dir, cfg));
      });
    });

    server.Post(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request& q, httplib::Response& r) {
        const ExportOptions opts = export_options_from_json(body_json(q));
        const std::string text = run_export(s.dir, opts);
        r.status = 200;
        r.set_content(text, opts.format == "svg" ? "image/svg+xml" : "application/dxf");
      });
    });

    server.Get(R"(/sessions/([^/]+)/artifacts/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      stage(req, res, [](Session& s, const httplib::Request& q, httplib::Response& r) {
        const std::string name = q.matches[2];
        if (!kArtifacts.count(name)) throw Error("not_found", "unknown artifact '" + name + "'");
        if (!fs::exists(s.dir / name)) throw Error("stale", name + " is stale or not computed yet");
        r.status = 200;
        r.set_content(read_text(s.dir / name), content_type(name));
      });
    });
  }

  // Called with the stage lock held by the request; hands the work to a thread
  // that acquires the lock once the request releases it.
  void start_param_unlocked(Session& s, const json& cfg) {
    const ParamOptions opts = param_options_from_json(cfg);
    load_decomposition(s.dir);
    if (s.worker.joinable()) s.worker.join();
    {
      std::lock_guard<std::mutex> lock(s.state_mu);
      s.job = "running";
      s.job_stage = "param";
      s.iteration = 0;
      s.energy = 0.0;
      s.result = nullptr;
      s.error = nullptr;
    }
    Session* sp = &s;
    s.worker = std::thread([sp, opts] {
      std::lock_guard<std::mutex> held(sp->run);
      json result, error;
      try {
        result = run_param(sp->dir, opts, [sp](int it, double e) {
          std::lock_guard<std::mutex> lock(sp->state_mu);
          sp->iteration = it;
          sp->energy = e;
        });
      } catch (const Error& e) {
        error = {{"code", e.code()}, {"message", e.what()}};
      } catch (const std::exception& e) {
        error = {{"code", "internal"}, {"message", e.what()}};
      }
      std::lock_guard<std::mutex> lock(sp->state_mu);
      sp->job = error.is_null() ? "done" : "failed";
      sp->result = result;
      sp->error = error;
    });
  }

  ~Impl() {
    server.stop();
    for (auto& [id, s] : sessions)
      if (s->worker.joinable()) s->worker.join();
  }
};

DesignService::DesignService(fs::path data_dir) : impl_(std::make_unique<Impl>()) {
  impl_->data = std::move(data_dir);
  fs::create_directories(impl_->sessions_dir());
  impl_->routes();
}

DesignService::~DesignService() = default;

bool DesignService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int DesignService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool DesignService::listen_after_bind() { return impl_->server.listen_after_bind(); }
void DesignService::wait_until_ready() const { impl_->server.wait_until_ready(); }
void DesignService::stop() { impl_->server.stop(); }

}  // namespace zipr
