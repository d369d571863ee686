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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mechdyn::cli {

namespace {

std::string cell(Json const &value)
{
  if (value.is_number_float())
  {
    return format_number(value.get<double>());
  }
  if (value.is_string())
  {
    return value.get<std::string>();
  }
  return value.dump();
}

std::string csv_field(std::string const &s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
  {
    return s;
  }
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"')
    {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

void write_text(Report const &report, std::ostream &out)
{
  out << "mechdyn " << report.command << "\n";
  if (!report.results.empty())
  {
    out << "results:\n";
    for (auto const &r : report.results)
    {
      out << "  " << r.name << " = " << cell(r.value) << "  (tolerance " << format_number(r.tolerance) << ")\n";
    }
  }
  for (auto const &t : report.tables)
  {
    out << "table " << t.name << ":\n  ";
    for (std::size_t j = 0; j < t.columns.size(); ++j)
    {
      out << (j ? "  " : "") << t.columns[j];
    }
    out << "\n";
    for (auto const &row : t.rows)
    {
      out << "  ";
      for (std::size_t j = 0; j < row.size(); ++j)
      {
        out << (j ? "  " : "") << cell(row[j]);
      }
      out << "\n";
    }
  }
  if (!report.checks.empty())
  {
    out << "checks:\n";
    for (auto const &c : report.checks)
    {
      out << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << "  value " << format_number(c.value) << "  expected "
          << format_number(c.expected) << "  tolerance " << format_number(c.tolerance);
      if (!c.detail.empty())
      {
        out << "  (" << c.detail << ")";
      }
      out << "\n";
    }
  }
  out << "overall: " << (report.passed() ? "PASS" : "FAIL") << "\n";
  out << "seed " << report.seed << ", mechdyn " << kToolVersion << ", " << report.timestamp << "\n";
}

void write_csv(Report const &report, std::ostream &out)
{
  out << "# " << report.command << "\n";
  out << "# results\nname,value,tolerance\n";
  for (auto const &r : report.results)
  {
    out << csv_field(r.name) << "," << csv_field(cell(r.value)) << "," << format_number(r.tolerance) << "\n";
  }
  out << "\n# checks\nname,passed,value,expected,tolerance,detail\n";
  for (auto const &c : report.checks)
  {
    out << csv_field(c.name) << "," << (c.passed ? "true" : "false") << "," << format_number(c.value) << ","
        << format_number(c.expected) << "," << format_number(c.tolerance) << "," << csv_field(c.detail) << "\n";
  }
  for (auto const &t : report.tables)
  {
    out << "\n# table " << t.name << "\n";
    for (std::size_t j = 0; j < t.columns.size(); ++j)
    {
      out << (j ? "," : "") << csv_field(t.columns[j]);
    }
    out << "\n";
    for (auto const &row : t.rows)
    {
      for (std::size_t j = 0; j < row.size(); ++j)
      {
        out << (j ? "," : "") << csv_field(cell(row[j]));
      }
      out << "\n";
    }
  }
  out << "\n# provenance\ntool,version,seed,timestamp\nmechdyn," << kToolVersion << "," << report.seed << ","
      << report.timestamp << "\n";
}

}  // namespace

std::string format_number(double value)
{
  if (std::isnan(value))
  {
    return "nan";
  }
  if (std::isinf(value))
  {
    return value > 0 ? "inf" : "-inf";
  }
  if (value == 0.0)
  {
    return "0";
  }
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

Check &Report::expect_near(std::string name, double value, double expected, double tolerance, std::string detail)
{
  bool const ok = std::abs(value - expected) <= tolerance;
  checks.push_back({std::move(name), ok, value, expected, tolerance, std::move(detail)});
  return checks.back();
}

Check &Report::expect_at_most(std::string name, double value, double bound, std::string detail)
{
  checks.push_back({std::move(name), value <= bound, value, bound, bound, std::move(detail)});
  return checks.back();
}

Check &Report::expect_true(std::string name, bool condition, std::string detail)
{
  checks.push_back({std::move(name), condition, condition ? 1.0 : 0.0, 1.0, 0.0, std::move(detail)});
  return checks.back();
}

bool Report::passed() const
{
  return std::all_of(checks.begin(), checks.end(), [](Check const &c) { return c.passed; });
}

Json Report::to_json() const
{
  Json j;
  j["schema"]  = kSchemaVersion;
  j["command"] = command;
  j["inputs"]  = inputs;
  Json res     = Json::object();
  for (auto const &r : results)
  {
    res[r.name] = Json{{"value", r.value}, {"tolerance", r.tolerance}};
  }
  j["results"] = std::move(res);
  Json tabs    = Json::object();
  for (auto const &t : tables)
  {
    tabs[t.name] = Json{{"columns", t.columns}, {"rows", t.rows}};
  }
  j["tables"] = std::move(tabs);
  Json cs     = Json::array();
  for (auto const &c : checks)
  {
    cs.push_back(Json{{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"expected", c.expected},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  }
  j["checks"]     = std::move(cs);
  j["passed"]     = passed();
  j["provenance"] = Json{{"tool", "mechdyn"}, {"version", kToolVersion}, {"seed", seed}, {"timestamp", timestamp}};
  return j;
}

void write_report(Report const &report, Format format, std::ostream &out)
{
  switch (format)
  {
  case Format::json: out << report.to_json().dump(2) << "\n"; break;
  case Format::csv: write_csv(report, out); break;
  case Format::text: write_text(report, out); break;
  }
}

void write_reports(std::vector<Report> const &reports, Format format, std::ostream &out)
{
  if (format == Format::json)
  {
    Json all = Json::array();
    for (auto const &r : reports)
    {
      all.push_back(r.to_json());
    }
    out << all.dump(2) << "\n";
    return;
  }
  for (std::size_t i = 0; i < reports.size(); ++i)
  {
    if (i)
    {
      out << "\n";
    }
    write_report(reports[i], format, out);
  }
}

}  // namespace mechdyn::cli
