#include "qsurf/service.hpp"

#include "qsurf/error.hpp"
#include "qsurf/inference.hpp"
#include "qsurf/serialize.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>

namespace qsurf {

namespace {

DirectionGrid
service_grid(int dims, std::size_t directions)
{
  return DirectionGrid::make(dims, dims == 1 ? 2 : directions, default_scheme(dims));
}

const std::string*
find(const Service::Params& params, std::string_view key)
{
  const auto it = params.find(key);
  return it == params.end() ? nullptr : &it->second;
}

double
real_param(const Service::Params& params, std::string_view key)
{
  const std::string* v = find(params, key);
  if (!v)
    throw ParseError("missing parameter '" + std::string(key) + "'");
  char* end = nullptr;
  const double x = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size() || !std::isfinite(x))
    throw ParseError("parameter '" + std::string(key) + "' is not a finite real");
  return x;
}

double
real_param(const Service::Params& params, std::string_view key, double fallback)
{
  return find(params, key) ? real_param(params, key) : fallback;
}

std::uint64_t
count_param(const Service::Params& params, std::string_view key, std::uint64_t fallback)
{
  const std::string* v = find(params, key);
  if (!v)
    return fallback;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
  if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size())
    throw ParseError("parameter '" + std::string(key) + "' is not a non-negative integer");
  return x;
}

Point
observer_param(const Service::Params& params, int dims)
{
  const std::string* v = find(params, "o");
  if (!v)
    return Point::Zero(dims);
  Point o = parse_point(*v);
  if (o.size() != dims)
    throw DimensionError("observer has " + std::to_string(o.size()) +
                         " coordinates, data has " + std::to_string(dims));
  return o;
}

Service::Response
json_response(int status, const ordered_json& doc)
{
  return { status, doc.dump(), "application/json" };
}

Service::Response
error_response(int status, const std::exception& e)
{
  ordered_json doc;
  doc["error"] = { { "kind", error_kind(e) }, { "message", e.what() } };
  return json_response(status, doc);
}

ordered_json
meta(const Session& s)
{
  ordered_json j;
  j["n"] = s.cache().n();
  j["d"] = s.cache().dims();
  j["grid"] = { { "scheme", std::string(to_string(s.cache().grid().scheme())) },
                { "count", s.cache().grid().size() } };
  j["label"] = s.dataset().label();
  return j;
}

} // namespace

namespace {

ProjectionCache
session_cache(Dataset data, const ServiceOptions& options)
{
  const int dims = data.dims();
  return ProjectionCache(std::make_shared<const Dataset>(std::move(data)),
                         service_grid(dims, options.directions),
                         options.cache);
}

} // namespace

Session::Session(Dataset data, const ServiceOptions& options)
  : cache_(session_cache(std::move(data), options))
{
}

QuantileSurface
Session::surface(const Point& observer, double alpha) const
{
  std::shared_ptr<const QuantileSurface> base;
  {
    std::lock_guard lock(base_mutex_);
    if (auto it = base_.find(alpha); it != base_.end())
      base = it->second;
  }
  if (!base) {
    base = std::make_shared<const QuantileSurface>(
      quantile_surface(cache_, Point::Zero(cache_.dims()), alpha));
    std::lock_guard lock(base_mutex_);
    base_.emplace(alpha, base);
  }
  return transfer_surface(*base, observer);
}

Service::JobHold::JobHold(std::atomic<int>& counter)
  : counter_(&counter)
{
  counter_->fetch_add(1);
}

Service::JobHold::JobHold(JobHold&& other) noexcept
  : counter_(other.counter_)
{
  other.counter_ = nullptr;
}

Service::JobHold::~JobHold()
{
  if (counter_)
    counter_->fetch_sub(1);
}

Service::Service(Dataset data, ServiceOptions options)
  : options_(options)
  , session_(std::make_shared<const Session>(std::move(data), options_))
{
}

Service::~Service()
{
  stop();
}

std::shared_ptr<const Session>
Service::session() const
{
  std::lock_guard lock(session_mutex_);
  return session_;
}

void
Service::load(Dataset data)
{
  std::lock_guard exclusive(load_mutex_);
  if (holds_.load() > 0)
    throw SessionBusy("a running job holds the session");
  auto next = std::make_shared<const Session>(std::move(data), options_);
  if (holds_.load() > 0)
    throw SessionBusy("a running job holds the session");
  std::lock_guard lock(session_mutex_);
  session_ = std::move(next);
}

Service::Response
Service::handle(std::string_view method,
                std::string_view path,
                const Params& params,
                std::string_view body)
{
  try {
    return dispatch(method, path, params, body);
  } catch (const SessionBusy& e) {
    return error_response(409, e);
  } catch (const Error& e) {
    return error_response(400, e);
  } catch (const std::exception& e) {
    return error_response(500, e);
  }
}

Service::Response
Service::dispatch(std::string_view method,
                  std::string_view path,
                  const Params& params,
                  std::string_view body)
{
  static const std::map<std::string_view, std::string_view> routes{
    { "/meta", "GET" }, { "/surface", "GET" }, { "/band", "GET" },
    { "/tukey", "GET" }, { "/psi", "GET" },    { "/dataset", "POST" },
  };
  const auto route = routes.find(path);
  if (route == routes.end())
    return json_response(404, { { "error", { { "kind", "not-found" }, { "message", std::string(path) } } } });
  if (route->second != method)
    return json_response(405, { { "error", { { "kind", "method" }, { "message", "use " + std::string(route->second) } } } });

  if (path == "/dataset") {
    load(parse_dataset(body, DataFormat::csv, "upload"));
    return json_response(200, meta(*session()));
  }

  const auto s = session();
  const int d = s->cache().dims();
  if (path == "/meta")
    return json_response(200, meta(*s));
  if (path == "/surface") {
    const Point o = observer_param(params, d);
    return json_response(200, to_json(s->surface(o, real_param(params, "alpha"))));
  }
  if (path == "/band") {
    const Point o = observer_param(params, d);
    BandOptions opt;
    opt.level = real_param(params, "level", opt.level);
    opt.draws = count_param(params, "draws", opt.draws);
    opt.seed = count_param(params, "seed", opt.seed);
    opt.bandwidth = real_param(params, "bandwidth", opt.bandwidth);
    opt.studentized = count_param(params, "studentized", 0) != 0;
    return json_response(200, to_json(confidence_band(s->cache(), o, real_param(params, "alpha"), opt)));
  }
  if (path == "/tukey")
    return json_response(200, to_json(tukey_region_2d(s->cache(), real_param(params, "alpha"))));
  // /psi
  const DeltaRange delta = DeltaRange::make(real_param(params, "alphaMinus", DeltaRange{}.alpha_minus),
                                            real_param(params, "alphaPlus", DeltaRange{}.alpha_plus));
  const double eps = real_param(params, "eps");
  const double value = psi_hat(s->cache(), Point::Zero(d), eps, delta);
  ordered_json j;
  j["eps"] = eps;
  j["alpha_minus"] = delta.alpha_minus;
  j["alpha_plus"] = delta.alpha_plus;
  j["psi"] = value;
  return json_response(200, j);
}

int
Service::bind(const std::string& host, int port)
{
  if (!server_) {
    server_ = std::make_unique<httplib::Server>();
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      Params params;
      for (const auto& [k, v] : req.params)
        params.emplace(k, v);
      const Response out = handle(req.method, req.path, params, req.body);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server_->Get(".*", route);
    server_->Post(".*", route);
    server_->Put(".*", route);
    server_->Delete(".*", route);
  }
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw ConfigurationError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void
Service::run()
{
  if (!server_)
    throw ConfigurationError("service is not bound");
  server_->listen_after_bind();
}

void
Service::stop()
{
  if (server_)
    server_->stop();
}

} // namespace qsurf
