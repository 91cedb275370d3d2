#pragma once

#include "qsurf/quantiles.hpp"
#include "qsurf/samples.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace qsurf {

struct ServiceOptions
{
  std::size_t directions = 360; //!< forced to 2 for d = 1
  CacheOptions cache{};
};

/// Immutable dataset + projection cache. Base surfaces at the origin are
/// memoised per alpha; other observers are served by transfer.
class Session
{
public:
  Session(Dataset data, const ServiceOptions& options);

  const ProjectionCache& cache() const { return cache_; }
  const Dataset& dataset() const { return cache_.dataset(); }
  QuantileSurface surface(const Point& observer, double alpha) const;

private:
  ProjectionCache cache_;
  mutable std::mutex base_mutex_;
  mutable std::map<double, std::shared_ptr<const QuantileSurface>> base_;
};

/// Wire API over one dataset. Requests are answered by handle(), which the
/// HTTP layer and tests share. Readers take a snapshot of the session, so a
/// concurrent reload is seen either entirely or not at all.
class Service
{
public:
  struct Response
  {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
  };
  using Params = std::map<std::string, std::string, std::less<>>;

  //! RAII marker of a running job; reloads are refused while any is alive.
  class JobHold
  {
  public:
    explicit JobHold(std::atomic<int>& counter);
    JobHold(JobHold&& other) noexcept;
    JobHold(const JobHold&) = delete;
    JobHold& operator=(const JobHold&) = delete;
    JobHold& operator=(JobHold&&) = delete;
    ~JobHold();

  private:
    std::atomic<int>* counter_;
  };

  Service(Dataset data, ServiceOptions options = {});
  ~Service();

  Response handle(std::string_view method,
                  std::string_view path,
                  const Params& params,
                  std::string_view body = {});

  std::shared_ptr<const Session> session() const;
  //! Rebuilds the cache and swaps it in; throws SessionBusy while held.
  void load(Dataset data);
  JobHold hold() { return JobHold(holds_); }

  //! Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  //! Serves until stop(); bind() must have succeeded.
  void run();
  void stop();

private:
  Response dispatch(std::string_view method,
                    std::string_view path,
                    const Params& params,
                    std::string_view body);

  ServiceOptions options_;
  mutable std::mutex session_mutex_;
  std::shared_ptr<const Session> session_;
  std::mutex load_mutex_;
  std::atomic<int> holds_{ 0 };
  std::unique_ptr<httplib::Server> server_;
};

} // namespace qsurf
