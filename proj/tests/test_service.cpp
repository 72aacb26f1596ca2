#include "zipr/generators.hpp"
#include "zipr/obj_io.hpp"
#include "zipr/pipeline.hpp"
#include "zipr/service.hpp"

#include "httplib.h"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zipr;

namespace {

class Server {
public:
  explicit Server(const fs::path& data) : svc_(data) {
    port_ = svc_.bind_any_port("127.0.0.1");
    thread_ = std::thread([this] { svc_.listen_after_bind(); });
    svc_.wait_until_ready();
  }
  ~Server() {
    svc_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }

private:
  DesignService svc_;
  int port_ = 0;
  std::thread thread_;
};

fs::path data_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zipr_service_" + name);
  fs::remove_all(p);
  return p;
}

json body(const httplib::Result& r) { return json::parse(r->body); }

std::string new_session(httplib::Client& c, const std::string& fixture) {
  auto r = c.Post("/sessions", json{{"fixture", fixture}}.dump(), "application/json");
  EXPECT_EQ(r->status, 201) << r->body;
  return body(r)["id"];
}

json wait_job(httplib::Client& c, const std::string& id) {
  for (int i = 0; i < 6000; ++i) {
    auto r = c.Get("/sessions/" + id + "/status");
    const json j = body(r);
    if (j["job"]["state"] != "running") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ADD_FAILURE() << "job did not finish";
  return {};
}

std::string obj_of(const SurfaceMesh& m) {
  std::ostringstream o;
  write_obj(o, m.positions(), m.faces());
  return o.str();
}

}  // namespace

TEST(Service, UnknownSessionIs404) {
  Server s(data_dir("404"));
  auto c = s.client();
  auto r = c.Get("/sessions/s999999");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"]["code"], "not_found");
  EXPECT_EQ(c.Put("/sessions/nope/spiral", "{}", "application/json")->status, 404);
}

TEST(Service, UploadsRawObj) {
  Server s(data_dir("upload"));
  auto c = s.client();
  const SurfaceMesh m = make_tube(12, 4, 1.0, 1.0);
  auto r = c.Post("/sessions", obj_of(m), "text/plain");
  ASSERT_EQ(r->status, 201) << r->body;
  const json j = body(r);
  EXPECT_EQ(j["mesh"]["faces"], m.num_faces());
  auto g = c.Get("/sessions/" + j["id"].get<std::string>() + "/mesh");
  ASSERT_EQ(g->status, 200);
  const json arrays = body(g);
  EXPECT_EQ(arrays["positions"].size(), 3u * m.num_vertices());
  EXPECT_EQ(arrays["indices"].size(), 3u * m.num_faces());
  EXPECT_EQ(c.Post("/sessions", "v 0 0\nf 1 2 3\n", "text/plain")->status, 422);
}

TEST(Service, SpiralBeforeParameterizeIs409) {
  Server s(data_dir("409"));
  auto c = s.client();
  const std::string id = new_session(c, "t-shape");
  auto r = c.Put("/sessions/" + id + "/spiral", "{}", "application/json");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"]["code"], "stage_order");
  EXPECT_EQ(c.Post("/sessions/" + id + "/ribbon", "", "application/json")->status, 409);
  EXPECT_EQ(c.Post("/sessions/" + id + "/export", "{}", "application/json")->status, 409);
}

TEST(Service, NonAnnulusSegmentationIs422WithDiagnostic) {
  Server s(data_dir("422"));
  auto c = s.client();
  auto r = c.Post("/sessions", obj_of(make_uv_sphere(16, 8)), "text/plain");
  ASSERT_EQ(r->status, 201);
  const std::string id = body(r)["id"];
  auto put = c.Put("/sessions/" + id + "/segmentation", "{}", "application/json");
  ASSERT_EQ(put->status, 422);
  const json e = body(put)["error"];
  EXPECT_EQ(e["code"], "not_annulus");
  EXPECT_NE(e["message"].get<std::string>().find("annulus"), std::string::npos);
  // rejected synchronously by parameterize too
  EXPECT_EQ(c.Post("/sessions/" + id + "/parameterize", "{}", "application/json")->status, 422);
  EXPECT_EQ(c.Put("/sessions/" + id + "/segmentation", "{oops", "application/json")->status, 422);
}

TEST(Service, AsyncParameterizeReportsProgress) {
  Server s(data_dir("async"));
  auto c = s.client();
  const std::string id = new_session(c, "two-part");
  auto r = c.Post("/sessions/" + id + "/parameterize", "{}", "application/json");
  ASSERT_EQ(r->status, 202) << r->body;
  EXPECT_EQ(body(r)["job"]["state"], "running");
  // one stage at a time: anything else is refused while the job runs or before charts exist
  EXPECT_EQ(c.Put("/sessions/" + id + "/spiral", "{}", "application/json")->status, 409);
  const json st = wait_job(c, id);
  EXPECT_EQ(st["job"]["state"], "done");
  EXPECT_GT(st["job"]["iteration"].get<int>(), 0);
  EXPECT_TRUE(st["job"]["result"]["converged"].get<bool>());
  EXPECT_EQ(st["artifacts"]["param"], "ready");
  auto charts = c.Get("/sessions/" + id + "/artifacts/charts.json");
  EXPECT_EQ(charts->status, 200);
}

TEST(Service, UpstreamChangeMarksDownstreamStale) {
  Server s(data_dir("stale"));
  auto c = s.client();
  const std::string id = new_session(c, "cylinder");
  ASSERT_EQ(c.Post("/sessions/" + id + "/parameterize", "{}", "application/json")->status, 202);
  wait_job(c, id);
  ASSERT_EQ(c.Put("/sessions/" + id + "/spiral", R"({"windings":[3]})", "application/json")->status, 200);
  ASSERT_EQ(c.Post("/sessions/" + id + "/ribbon", "", "application/json")->status, 200);
  json st = body(c.Get("/sessions/" + id));
  for (const char* k : {"decompose", "param", "spiral", "ribbon"}) EXPECT_EQ(st["artifacts"][k], "ready") << k;

  ASSERT_EQ(c.Put("/sessions/" + id + "/segmentation", "{}", "application/json")->status, 200);
  st = body(c.Get("/sessions/" + id));
  EXPECT_EQ(st["artifacts"]["decompose"], "ready");
  for (const char* k : {"param", "spiral", "ribbon", "export"}) EXPECT_EQ(st["artifacts"][k], "stale") << k;
  auto a = c.Get("/sessions/" + id + "/artifacts/charts.json");
  EXPECT_EQ(a->status, 409);
  EXPECT_EQ(body(a)["error"]["code"], "stale");
  EXPECT_EQ(c.Get("/sessions/" + id + "/artifacts/secret.txt")->status, 404);
}

TEST(Service, CorsHeaders) {
  Server s(data_dir("cors"));
  auto c = s.client();
  auto pre = c.Options("/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("PUT"), std::string::npos);
  EXPECT_EQ(c.Get("/sessions/x")->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Service, SessionsSurviveRestart) {
  const fs::path dir = data_dir("restart");
  std::string id;
  {
    Server s(dir);
    auto c = s.client();
    id = new_session(c, "cylinder");
  }
  Server s(dir);
  auto c = s.client();
  auto r = c.Get("/sessions/" + id);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["artifacts"]["decompose"], "ready");
  EXPECT_NE(new_session(c, "cylinder"), id);
}

// Same inputs through the service and the CLI give the same bytes.
TEST(Service, TShapeWalkThroughMatchesCli) {
  const fs::path data = data_dir("walk");
  Server s(data);
  auto c = s.client();
  const std::string id = new_session(c, "t-shape");
  const std::string seg = read_text(data / "sessions" / id / project::kSeg);
  ASSERT_EQ(c.Put("/sessions/" + id + "/segmentation", seg, "application/json")->status, 200);
  ASSERT_EQ(c.Post("/sessions/" + id + "/parameterize", "{}", "application/json")->status, 202);
  ASSERT_EQ(wait_job(c, id)["job"]["state"], "done");
  const std::string spec = R"({"windings":[2,2,2]})";
  auto sp = c.Put("/sessions/" + id + "/spiral", spec, "application/json");
  ASSERT_EQ(sp->status, 200) << sp->body;
  EXPECT_GT(body(sp)["polyline"].size(), 30u);
  auto rb = c.Post("/sessions/" + id + "/ribbon", "{}", "application/json");
  ASSERT_EQ(rb->status, 200) << rb->body;
  EXPECT_EQ(body(rb)["report"]["folded_faces"].size(), 0u);
  EXPECT_GT(body(rb)["flat"]["indices"].size(), 0u);
  auto ex = c.Post("/sessions/" + id + "/export", R"({"bed":"1000x600","format":"svg"})", "application/json");
  ASSERT_EQ(ex->status, 200) << ex->body;
  EXPECT_EQ(ex->get_header_value("Content-Type"), "image/svg+xml");

  const fs::path ref = data_dir("walk_ref");
  fs::create_directories(ref);
  write_text(ref.string() + "_seg.json", seg);
  write_text(ref.string() + "_spec.json", spec);
  write_text(ref.string() + "_mesh.obj", read_text(data / "sessions" / id / project::kMesh));
  const std::string cli = ZIPR_CLI;
  const std::string steps[] = {
      "decompose " + ref.string() + "_mesh.obj --seg " + ref.string() + "_seg.json --project " + ref.string(),
      "param " + ref.string(), "spiral " + ref.string() + " --spec " + ref.string() + "_spec.json",
      "ribbon " + ref.string(), "export " + ref.string() + " --bed 1000x600 --format svg"};
  for (const std::string& step : steps) ASSERT_EQ(std::system((cli + " " + step + " >/dev/null").c_str()), 0) << step;
  EXPECT_TRUE(read_text(ref / project::kPlanSvg) == ex->body);
  const fs::path sd = data / "sessions" / id;
  for (const char* f : {project::kCharts, project::kCurve, project::kRibbon, project::kFlat, project::kPlanReport})
    EXPECT_TRUE(read_text(sd / f) == read_text(ref / f)) << f;
}
