// Copyright 2026 The mechdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mechdyn/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <map>
#include <ostream>

namespace mechdyn::cli {

namespace {

std::string utc_timestamp()
{
  std::time_t const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm           tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

int exit_code(std::vector<Report> const &reports)
{
  for (auto const &r : reports)
  {
    if (!r.passed())
    {
      return 1;
    }
  }
  return 0;
}

}  // namespace

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Dynamic mechanism design toolkit: efficient policies, Groves/pivot transfers, budget balance of "
               "repeated bilateral trade and two-period screening."};
  app.name("mechdyn");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string const                  format_help = "Output format: text, json or csv";
  std::string                        format_name = "text";
  std::map<std::string, Format> const formats{{"text", Format::text}, {"json", Format::json}, {"csv", Format::csv}};
  app.add_option("--format", format_name, format_help)->check(CLI::IsMember({"text", "json", "csv"}));
  app.fallthrough();

  std::string name;
  bool        all = false;
  DemoOptions demo_options;
  auto       *demo = app.add_subcommand("demo", "Reproduce a built-in worked example");
  demo->add_option("name", name, "Demo name");
  demo->add_flag("--all", all, "Run every demo");
  demo->add_option("--alpha", demo_options.alpha, "Stay probability (two-state-infinite)");
  demo->add_option("--delta", demo_options.delta, "Discount factor (two-state-infinite)");
  demo->add_option("--grid", demo_options.grid, "Quadrature intervals (two-period demos)");

  std::string path;
  BbOptions   bb_options;
  auto       *bb = app.add_subcommand("bb", "Budget balance with lump-sum fees for a trade scenario");
  bb->add_option("file", path, "Scenario file")->required();
  bb->add_option("--delta", bb_options.delta, "Override the discount factor");
  bb->add_option("--grid-step", bb_options.grid_step, "Sweep the discount factor and report the threshold");
  bb->add_option("--horizon", bb_options.horizon, "Finite horizon T instead of the infinite series");
  bb->add_option("--mc-paths", bb_options.mc_paths, "Cross-check the deficit by simulating M paths");

  MechOptions mech_options;
  bool        pivot = false;
  auto       *mech  = app.add_subcommand("mech", "Efficient policy and dynamic Groves transfers with IC checks");
  mech->add_option("file", path, "Scenario file (trade or joint)")->required();
  auto *pivot_flag  = mech->add_flag("--pivot", pivot, "Pivot transfers (default)");
  auto *groves_opt  = mech->add_option("--groves", mech_options.groves_file, "Groves transfers from a phi file");
  auto *flow_opt    = mech->add_option("--transfers", mech_options.transfers_file, "Arbitrary per-period transfers");
  pivot_flag->excludes(groves_opt)->excludes(flow_opt);
  groves_opt->excludes(flow_opt);
  mech->add_option("--ic-tol", mech_options.ic_tolerance, "Tolerance for the incentive check");

  ScreenOptions screen_options;
  auto         *screen = app.add_subcommand("screen", "Two-period screening: virtual values, rules and revenue");
  screen->add_option("file", path, "Scenario file")->required();
  auto *optimal_flag = screen->add_flag("--optimal", screen_options.optimal, "Optimal threshold rules (default)");
  auto *rules_opt    = screen->add_option("--check-rules", screen_options.rules_file, "Check the rules in a file");
  optimal_flag->excludes(rules_opt);
  screen->add_option("--grid", screen_options.grid, "Grid intervals N");

  std::vector<std::string> argv_storage{"mechdyn"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : argv_storage)
  {
    argv.push_back(a.data());
  }

  try
  {
    app.parse(static_cast<int>(argv.size()), argv.data());
  }
  catch (CLI::ParseError const &e)
  {
    // --help and --version go to out with status 0; usage errors to err.
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  Format const format = formats.at(format_name);
  try
  {
    std::vector<Report> reports;
    std::string const   timestamp = utc_timestamp();
    if (demo->parsed())
    {
      if (all == !name.empty())
      {
        err << "mechdyn: give a demo name or --all\n";
        return 2;
      }
      for (auto const &n : all ? demo_names() : std::vector<std::string>{name})
      {
        reports.push_back(cmd_demo(n, demo_options));
      }
    }
    else if (bb->parsed())
    {
      reports.push_back(cmd_bb(load_scenario(path), bb_options));
    }
    else if (mech->parsed())
    {
      reports.push_back(cmd_mech(load_scenario(path), mech_options));
    }
    else if (screen->parsed())
    {
      reports.push_back(cmd_screen(load_scenario(path), screen_options));
    }
    for (auto &r : reports)
    {
      r.timestamp = timestamp;
    }
    if (all)
    {
      write_reports(reports, format, out);
    }
    else
    {
      write_report(reports.front(), format, out);
    }
    return exit_code(reports);
  }
  catch (InvalidArgument const &e)
  {
    err << "mechdyn: input error: " << e.what() << "\n";
    return 2;
  }
  catch (NonConvergence const &e)
  {
    err << "mechdyn: " << e.what() << " (discount " << format_number(e.discount()) << ", iteration cap " << e.cap()
        << ")\n";
    return 1;
  }
  catch (DensityZero const &e)
  {
    err << "mechdyn: " << e.what() << " at theta1 = " << format_number(e.theta1())
        << ", theta2 = " << format_number(e.theta2()) << "\n";
    return 1;
  }
  catch (std::exception const &e)
  {
    err << "mechdyn: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mechdyn::cli
