#include "qsurf/cli.hpp"

#include "qsurf/error.hpp"
#include "qsurf/inference.hpp"
#include "qsurf/models.hpp"
#include "qsurf/parallel.hpp"
#include "qsurf/serialize.hpp"
#include "qsurf/service.hpp"
#include "qsurf/verify.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace qsurf::cli {

namespace {

struct DataArgs
{
  std::string path;
  std::string format;
  std::size_t directions = 360;

  void attach(CLI::App* app)
  {
    app->add_option("--data", path, "dataset file (csv or jsonl)")->required();
    app->add_option("--format", format, "csv | jsonl (default: from extension)");
    app->add_option("--directions", directions, "grid size (ignored for d = 1)")
      ->check(CLI::PositiveNumber);
  }

  ProjectionCache cache() const
  {
    auto data = std::make_shared<const Dataset>(
      format.empty() ? load_dataset(path) : load_dataset(path, data_format_from_string(format)));
    const int d = data->dims();
    return ProjectionCache(data, DirectionGrid::make(d, d == 1 ? 2 : directions, default_scheme(d)));
  }

  void echo(ordered_json& j) const
  {
    j["data"] = path;
    j["format"] = format.empty() ? std::string(data_format_for_path(path) == DataFormat::csv ? "csv" : "jsonl") : format;
    j["directions"] = directions;
  }
};

Point
observer_or_origin(const std::string& text, int dims)
{
  if (text.empty())
    return Point::Zero(dims);
  Point o = parse_point(text);
  if (o.size() != dims)
    throw DimensionError("observer has " + std::to_string(o.size()) + " coordinates, data has " +
                         std::to_string(dims));
  return o;
}

void
write_output(const std::string& path, std::string_view text, std::ostream& out)
{
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

void
echo(std::ostream& err, const ordered_json& config)
{
  err << "config " << config.dump() << '\n';
}

} // namespace

int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Directional quantile surfaces: estimation, bands and replication studies",
                "qsurf" };
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (default: QSURF_THREADS or all cores)");

  // surface
  DataArgs surface_data;
  std::string surface_o, surface_out;
  double surface_alpha = 0.0;
  auto* surface = app.add_subcommand("surface", "quantile surface seen from an observer");
  surface_data.attach(surface);
  surface->add_option("--o", surface_o, "observer \"x,y,...\" (default: origin)");
  surface->add_option("--alpha", surface_alpha, "level in [1/2, 1)")->required();
  surface->add_option("--out", surface_out, "output file (default: stdout)");

  // band
  DataArgs band_data;
  std::string band_o, band_out;
  double band_alpha = 0.0;
  BandOptions band_opt;
  auto* band = app.add_subcommand("band", "joint confidence band around a surface");
  band_data.attach(band);
  band->add_option("--o", band_o, "observer \"x,y,...\" (default: origin)");
  band->add_option("--alpha", band_alpha, "level in [1/2, 1)")->required();
  band->add_option("--level", band_opt.level, "confidence level in [0, 1)");
  band->add_option("--draws", band_opt.draws, "Gaussian field draws (>= 100)");
  band->add_option("--seed", band_opt.seed, "seed (default 0)");
  band->add_option("--bandwidth", band_opt.bandwidth, "h estimation bandwidth (0: default)");
  band->add_flag("--studentized", band_opt.studentized, "per-direction scaled band");
  band->add_option("--out", band_out, "output file (default: stdout)");

  // tukey
  DataArgs tukey_data;
  double tukey_alpha = 0.0;
  std::string tukey_out;
  auto* tukey = app.add_subcommand("tukey", "intersection of quantile half-planes (d = 2)");
  tukey_data.attach(tukey);
  tukey->add_option("--alpha", tukey_alpha, "level in [1/2, 1)")->required();
  tukey->add_option("--out", tukey_out, "output file (default: stdout)");

  // psi
  DataArgs psi_data;
  std::vector<double> psi_eps;
  DeltaRange psi_delta;
  std::string psi_out;
  auto* psi = app.add_subcommand("psi", "empirical band infimum");
  psi_data.attach(psi);
  psi->add_option("--eps", psi_eps, "band widths")->required();
  psi->add_option("--alpha-minus", psi_delta.alpha_minus, "lower level of the range");
  psi->add_option("--alpha-plus", psi_delta.alpha_plus, "upper level of the range");
  psi->add_option("--out", psi_out, "output file (default: stdout)");

  // simulate
  std::string sim_model, sim_out;
  std::size_t sim_n = 0;
  std::uint64_t sim_seed = 0, sim_stream = 0;
  auto* simulate = app.add_subcommand("simulate", "draw a sample from a model config");
  simulate->add_option("--model", sim_model, "model config file")->required();
  simulate->add_option("--n", sim_n, "sample size")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "seed (default 0)");
  simulate->add_option("--stream", sim_stream, "stream id (default 0)");
  simulate->add_option("--out", sim_out, "csv output (default: stdout)");

  // verify
  std::string verify_study, verify_config, verify_out, verify_format = "csv";
  std::optional<std::uint64_t> verify_seed;
  std::optional<std::size_t> verify_reps;
  auto* verify = app.add_subcommand("verify", "run a replication study");
  verify->add_option("--study", verify_study, "consistency | lil | clt | bk | psi | coverage");
  verify->add_option("--config", verify_config, "study config file");
  verify->add_option("--seed", verify_seed, "override the config seed");
  verify->add_option("--replications", verify_reps, "override the replication count");
  verify->add_option("--out", verify_out, "report file (default: stdout)");
  verify->add_option("--format", verify_format, "csv | json");

  // transfer
  std::string transfer_in, transfer_o, transfer_out;
  auto* transfer = app.add_subcommand("transfer", "move a surface document to a new observer");
  transfer->add_option("--surface", transfer_in, "surface document")->required();
  transfer->add_option("--o", transfer_o, "new observer \"x,y,...\"")->required();
  transfer->add_option("--out", transfer_out, "output file (default: stdout)");

  // serve
  DataArgs serve_data;
  int serve_port = 8080;
  std::string serve_host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "wire API over one dataset");
  serve_data.attach(serve);
  serve->add_option("--port", serve_port, "port (0 picks a free one)");
  serve->add_option("--host", serve_host, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0)
      set_default_threads(threads);
    ordered_json cfg;
    cfg["threads"] = default_threads();

    if (surface->parsed()) {
      cfg["subcommand"] = "surface";
      surface_data.echo(cfg);
      cfg["o"] = surface_o.empty() ? "origin" : surface_o;
      cfg["alpha"] = surface_alpha;
      echo(err, cfg);
      const auto cache = surface_data.cache();
      const auto s = quantile_surface(cache, observer_or_origin(surface_o, cache.dims()), surface_alpha);
      write_output(surface_out, dump_document(to_json(s)), out);
    } else if (band->parsed()) {
      cfg["subcommand"] = "band";
      band_data.echo(cfg);
      cfg["o"] = band_o.empty() ? "origin" : band_o;
      cfg["alpha"] = band_alpha;
      cfg["level"] = band_opt.level;
      cfg["draws"] = band_opt.draws;
      cfg["seed"] = band_opt.seed;
      cfg["bandwidth"] = band_opt.bandwidth;
      cfg["studentized"] = band_opt.studentized;
      echo(err, cfg);
      const auto cache = band_data.cache();
      const auto b = confidence_band(cache, observer_or_origin(band_o, cache.dims()), band_alpha, band_opt);
      write_output(band_out, dump_document(to_json(b)), out);
    } else if (tukey->parsed()) {
      cfg["subcommand"] = "tukey";
      tukey_data.echo(cfg);
      cfg["alpha"] = tukey_alpha;
      echo(err, cfg);
      write_output(tukey_out, dump_document(to_json(tukey_region_2d(tukey_data.cache(), tukey_alpha))), out);
    } else if (psi->parsed()) {
      cfg["subcommand"] = "psi";
      psi_data.echo(cfg);
      cfg["eps"] = psi_eps;
      cfg["alpha_minus"] = psi_delta.alpha_minus;
      cfg["alpha_plus"] = psi_delta.alpha_plus;
      echo(err, cfg);
      const DeltaRange delta = DeltaRange::make(psi_delta.alpha_minus, psi_delta.alpha_plus);
      const auto cache = psi_data.cache();
      ordered_json doc;
      doc["alpha_minus"] = delta.alpha_minus;
      doc["alpha_plus"] = delta.alpha_plus;
      auto values = ordered_json::array();
      for (double e : psi_eps)
        values.push_back({ { "eps", e }, { "psi", psi_hat(cache, Point::Zero(cache.dims()), e, delta) } });
      doc["values"] = values;
      write_output(psi_out, dump_document(doc), out);
    } else if (simulate->parsed()) {
      const ModelSpec model = ModelSpec::from_json(nlohmann::json::parse(read_text_file(sim_model)));
      cfg["subcommand"] = "simulate";
      cfg["model"] = model.to_json();
      cfg["n"] = sim_n;
      cfg["seed"] = sim_seed;
      cfg["stream"] = sim_stream;
      echo(err, cfg);
      std::ostringstream csv;
      write_csv(sample(model, sim_n, sim_seed, sim_stream), csv);
      write_output(sim_out, csv.str(), out);
    } else if (verify->parsed()) {
      if (verify_study.empty() && verify_config.empty())
        throw CLI::RequiredError("--study or --config");
      nlohmann::json doc = nlohmann::json::object();
      if (!verify_config.empty())
        doc = nlohmann::json::parse(read_text_file(verify_config));
      if (!verify_study.empty())
        doc["study"] = verify_study;
      if (verify_seed)
        doc["seed"] = *verify_seed;
      if (verify_reps)
        doc["replications"] = *verify_reps;
      StudyConfig study = StudyConfig::from_json(doc);
      study.threads = default_threads();
      const ReportFormat format = report_format_from_string(verify_format);
      cfg["subcommand"] = "verify";
      cfg["config"] = study.to_json();
      cfg["config_hash"] = study.hash();
      echo(err, cfg);
      const StudyReport report = run_study(study);
      for (const auto& c : report.checks)
        err << "check " << c.name << ": " << (c.passed ? "pass" : "fail") << " (" << c.detail << ")\n";
      if (verify_out.empty() || verify_out == "-")
        out << (format == ReportFormat::csv ? format_report_csv(report)
                                            : dump_document(report_to_json(report)));
      else
        emit_report(report, verify_out, format);
    } else if (transfer->parsed()) {
      cfg["subcommand"] = "transfer";
      cfg["surface"] = transfer_in;
      cfg["o"] = transfer_o;
      echo(err, cfg);
      const auto s = surface_from_json(nlohmann::json::parse(read_text_file(transfer_in)));
      const auto moved = transfer_surface(s, observer_or_origin(transfer_o, s.dims()));
      write_output(transfer_out, dump_document(to_json(moved)), out);
    } else if (serve->parsed()) {
      cfg["subcommand"] = "serve";
      serve_data.echo(cfg);
      cfg["host"] = serve_host;
      cfg["port"] = serve_port;
      echo(err, cfg);
      Dataset data = serve_data.format.empty()
                       ? load_dataset(serve_data.path)
                       : load_dataset(serve_data.path, data_format_from_string(serve_data.format));
      Service service(std::move(data), ServiceOptions{ .directions = serve_data.directions });
      const int port = service.bind(serve_host, serve_port);
      err << "listening on " << serve_host << ":" << port << std::endl;
      service.run();
    }
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error [parse]: " << e.what() << '\n';
    return kExitDomain;
  } catch (const Error& e) {
    err << "error [" << error_kind(e) << "]: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

int
run(int argc, const char* const* argv)
{
  return run(argc, argv, std::cout, std::cerr);
}

} // namespace qsurf::cli
