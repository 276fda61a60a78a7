// superres: simulate, analyze and reconstruct thermal-light source
// geometries from multiphoton correlations.
//
// Settings come from built-in defaults, then --config, then flags.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "superres/config.hpp"
#include "superres/errors.hpp"
#include "superres/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string orders;
  std::optional<std::size_t> frames;
  std::string out;
  std::string format;
};

superres::Config resolve(const Flags& f, bool orders_are_aperture) {
  superres::Config c = f.config.empty() ? superres::Config{} : superres::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.orders.empty()) {
    (orders_are_aperture ? c.aperture_orders : c.orders) = superres::parse_orders(f.orders);
  }
  if (f.frames) c.frames = *f.frames;
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.format == "json") c.format = superres::OutputFormat::json;
  if (f.format == "csv") c.format = superres::OutputFormat::csv;
  superres::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superresolving imaging of thermal sources from multiphoton correlations"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "TOML config, or a manifest.<command>.json to rerun")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "64-bit seed for every random stream");
    cmd->add_option("--orders", flags.orders, "correlation orders, \"3..6\" or \"3,5\"");
    cmd->add_option("--frames", flags.frames, "frames R")->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--format", flags.format, "plot data format")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* simulate = app.add_subcommand("simulate", "speckle frames -> correlation curves");
  auto* analyze = app.add_subcommand("analyze", "curves -> spectra, gate decisions, evidence");
  auto* reconstruct = app.add_subcommand("reconstruct", "evidence -> ranked candidate geometries");
  auto* aperture = app.add_subcommand("aperture", "aperture ratios per order");
  auto* report = app.add_subcommand("report", "the whole pipeline plus report.json");
  for (auto* cmd : {simulate, analyze, reconstruct, aperture, report}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const bool for_aperture = aperture->parsed();
    const superres::Config config = resolve(flags, for_aperture);
    superres::CommandOutcome outcome;
    if (simulate->parsed()) outcome = superres::cmd_simulate(config);
    if (analyze->parsed()) outcome = superres::cmd_analyze(config);
    if (reconstruct->parsed()) outcome = superres::cmd_reconstruct(config);
    if (aperture->parsed()) outcome = superres::cmd_aperture(config);
    if (report->parsed()) outcome = superres::cmd_report(config);
    for (const auto& m : outcome.messages) {
      (m.starts_with("warning") || m.starts_with("error") ? std::cerr : std::cout) << m << "\n";
    }
    return outcome.exit_code;
  } catch (const superres::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const superres::EmptyEvidenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const superres::FitError& e) {
    std::cerr << "error: " << e.what() << "\n" << e.diagnostics() << "\n";
    return 4;
  } catch (const superres::GeometryError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
