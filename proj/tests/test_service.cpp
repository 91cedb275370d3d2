#include "qsurf/error.hpp"
#include "qsurf/service.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace qsurf;
using nlohmann::json;

namespace {

Service::Response
get(Service& s, std::string_view path, Service::Params params = {})
{
  return s.handle("GET", path, params);
}

json
body(const Service::Response& r)
{
  return json::parse(r.body);
}

ServiceOptions
options(std::size_t k = 72)
{
  ServiceOptions o;
  o.directions = k;
  o.cache.threads = 1;
  return o;
}

} // namespace

TEST(Service, Meta)
{
  Service s(qsurf::test::uniform_cloud(500, 2, 1), options());
  const auto r = get(s, "/meta");
  ASSERT_EQ(r.status, 200);
  const auto j = body(r);
  EXPECT_EQ(j.at("n"), 500);
  EXPECT_EQ(j.at("d"), 2);
  EXPECT_EQ(j.at("grid").at("count"), 72);
}

TEST(Service, SurfaceMatchesNaiveQuantile)
{
  const auto data = qsurf::test::uniform_cloud(400, 2, 2);
  Service s(data, options());
  const auto j = body(get(s, "/surface", { { "o", "0.25,-0.5" }, { "alpha", "0.7" } }));
  ASSERT_EQ(j.at("entries").size(), 72u);
  for (const auto& e : j.at("entries")) {
    Point u(2);
    u << e.at("u")[0].get<double>(), e.at("u")[1].get<double>();
    const double expected = qsurf::test::naive_quantile(data, u, 0.7) - (0.25 * u[0] - 0.5 * u[1]);
    EXPECT_NEAR(e.at("y").get<double>(), expected, 1e-12);
  }
}

TEST(Service, ObserverShiftIsExactInnerProduct)
{
  Service s(qsurf::test::uniform_cloud(1000, 2, 3), options(360));
  const auto a = body(get(s, "/surface", { { "o", "0,0" }, { "alpha", "0.8" } }));
  const auto b = body(get(s, "/surface", { { "o", "1.5,-2" }, { "alpha", "0.8" } }));
  for (std::size_t i = 0; i < 360; ++i) {
    const auto& u = a["entries"][i]["u"];
    const double shift = 1.5 * u[0].get<double>() - 2.0 * u[1].get<double>();
    EXPECT_NEAR(a["entries"][i]["y"].get<double>() - b["entries"][i]["y"].get<double>(), shift, 1e-12);
  }
}

TEST(Service, ErrorsCarryKindAndStatus)
{
  Service s(qsurf::test::uniform_cloud(200, 2, 4), options());
  auto r = get(s, "/surface", { { "alpha", "1.2" } });
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error"]["kind"], "domain");
  r = get(s, "/surface", { { "alpha", "abc" } });
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error"]["kind"], "parse");
  r = get(s, "/surface", { { "alpha", "0.7" }, { "o", "1,2,3" } });
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error"]["kind"], "dimension");
  EXPECT_EQ(get(s, "/nowhere").status, 404);
  EXPECT_EQ(s.handle("POST", "/meta", {}).status, 405);
  EXPECT_EQ(get(s, "/dataset").status, 405);
}

TEST(Service, BandTukeyPsi)
{
  Service s(qsurf::test::uniform_cloud(3000, 2, 5), options());
  const auto band = get(s, "/band", { { "alpha", "0.7" }, { "draws", "200" }, { "seed", "9" } });
  ASSERT_EQ(band.status, 200) << band.body;
  const auto bj = body(band);
  EXPECT_EQ(bj.at("draws"), 200);
  EXPECT_EQ(bj.at("halfwidth").size(), 72u);
  EXPECT_EQ(get(s, "/band", { { "alpha", "0.7" }, { "draws", "200" }, { "seed", "9" } }).body, band.body);

  const auto tukey = body(get(s, "/tukey", { { "alpha", "0.6" } }));
  EXPECT_FALSE(tukey.at("empty").get<bool>());
  EXPECT_GE(tukey.at("vertices").size(), 3u);

  const auto psi = get(s, "/psi", { { "eps", "0.05" }, { "alphaMinus", "0.6" }, { "alphaPlus", "0.8" } });
  ASSERT_EQ(psi.status, 200) << psi.body;
  const auto pj = body(psi);
  EXPECT_EQ(pj.at("alpha_plus"), 0.8);
  EXPECT_GT(pj.at("psi").get<double>(), 0.0);
}

TEST(Service, ReloadRefusedWhileJobHeld)
{
  Service s(qsurf::test::uniform_cloud(200, 2, 6), options());
  {
    auto hold = s.hold();
    const auto r = s.handle("POST", "/dataset", {}, "x,y\n0,0\n1,1\n2,0\n");
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(body(r)["error"]["kind"], "busy");
    EXPECT_THROW(s.load(qsurf::test::uniform_cloud(10, 2, 1)), SessionBusy);
  }
  const auto r = s.handle("POST", "/dataset", {}, "x,y\n0,0\n1,1\n2,0\n");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(body(r).at("n"), 3);
  EXPECT_EQ(body(get(s, "/meta")).at("n"), 3);
}

TEST(Service, ConcurrentReadersAgree)
{
  Service s(qsurf::test::uniform_cloud(2000, 2, 7), options(360));
  const std::string expected = get(s, "/surface", { { "o", "0.1,0.1" }, { "alpha", "0.75" } }).body;
  std::vector<std::string> seen(4);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < seen.size(); ++t)
    pool.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i)
        seen[t] = get(s, "/surface", { { "o", "0.1,0.1" }, { "alpha", "0.75" } }).body;
    });
  for (auto& th : pool)
    th.join();
  for (const auto& b : seen)
    EXPECT_EQ(b, expected);
}

TEST(Service, HttpRoundTrip)
{
  Service s(qsurf::test::uniform_cloud(300, 2, 8), options());
  const int port = s.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread server([&] { s.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  auto meta = client.Get("/meta");
  for (int tries = 0; !meta && tries < 50; ++tries) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    meta = client.Get("/meta");
  }
  ASSERT_TRUE(meta);
  EXPECT_EQ(meta->status, 200);
  EXPECT_EQ(json::parse(meta->body).at("n"), 300);
  auto surf = client.Get("/surface?o=0,0&alpha=0.7");
  ASSERT_TRUE(surf);
  EXPECT_EQ(surf->status, 200);
  EXPECT_EQ(surf->body, get(s, "/surface", { { "o", "0,0" }, { "alpha", "0.7" } }).body);
  auto bad = client.Get("/surface?alpha=2");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto posted = client.Post("/dataset", "0,0\n1,0\n0,1\n1,1\n", "text/csv");
  ASSERT_TRUE(posted);
  EXPECT_EQ(posted->status, 200);
  EXPECT_EQ(json::parse(posted->body).at("n"), 4);
  s.stop();
  server.join();
}
