#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/metrics.hpp"
#include "core/text_format.hpp"

namespace recap::mission {

namespace fs = std::filesystem;

std::vector<QuantileRow> compute_quantiles(const std::vector<MetricRow>& rows) {
  std::vector<double> values[2][2];  // [metric][iteration]
  for (const auto& r : rows) {
    if (r.iteration != 1 && r.iteration != 2)
      throw ValidationError("metric row '" + r.pose_id + "' has iteration " + std::to_string(r.iteration),
                            "iteration");
    values[0][r.iteration - 1].push_back(r.psnr_db);
    values[1][r.iteration - 1].push_back(r.ssim);
  }
  for (int it = 0; it < 2; ++it)
    if (values[0][it].empty())
      throw ValidationError("no metric rows for iteration " + std::to_string(it + 1), "metrics");

  std::vector<QuantileRow> out;
  const char* names[2] = {"psnr_db", "ssim"};
  for (int m = 0; m < 2; ++m)
    for (double q : kReportQuantiles)
      out.push_back({names[m], q, metrics::quantile(values[m][0], q), metrics::quantile(values[m][1], q)});
  return out;
}

void write_quantiles(const std::vector<QuantileRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "metric,q,iteration_1,iteration_2,delta\n";
  for (const auto& r : rows)
    out << r.metric << ',' << fmt_exact(r.q) << ',' << fmt_exact(r.iteration_1) << ',' << fmt_exact(r.iteration_2)
        << ',' << fmt_exact(r.delta()) << '\n';
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

void write_cdf(const std::vector<std::pair<double, double>> (&cdf)[2], const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "iteration,value,cumulative_fraction\n";
  for (int it = 0; it < 2; ++it)
    for (const auto& [v, f] : cdf[it]) out << it + 1 << ',' << fmt_exact(v) << ',' << fmt_exact(f) << '\n';
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string cdf_svg(const std::vector<std::pair<double, double>> (&cdf)[2], const std::string& title,
                    const std::string& x_label) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& series : cdf)
    for (const auto& [v, f] : series)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(lo < hi)) {
    lo = std::isfinite(lo) ? lo - 0.5 : 0.0;
    hi = lo + 1.0;
  }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const auto sx = [&](double v) { return kLeft + (std::clamp(v, lo, hi) - lo) / (hi - lo) * pw; };
  const auto sy = [&](double f) { return kTop + (1.0 - f) * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << ' ' << kH << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape_xml(title)
    << "</text>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    const double f = k / 5.0;
    s << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(kTop + ph + 18)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(v) << "</text>\n"
      << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(sy(f) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << tick_label(f) << "</text>\n";
  }
  s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kH - 16) << "\" text-anchor=\"middle\" font-size=\"13\">"
    << escape_xml(x_label) << "</text>\n"
    << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << num(kTop + ph / 2) << ")\">Cumulative fraction</text>\n";

  const char* colors[2] = {"#d62728", "#1f77b4"};
  for (int it = 0; it < 2; ++it) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[it] << "\" stroke-width=\"2\" points=\"";
    double prev = 0.0;
    bool first = true;
    for (const auto& [v, f] : cdf[it]) {
      const double x = sx(v);
      if (first) s << num(x) << ',' << num(sy(0.0));
      s << ' ' << num(x) << ',' << num(sy(prev)) << ' ' << num(x) << ',' << num(sy(f));
      prev = f;
      first = false;
    }
    s << "\"/>\n"
      << "<text x=\"" << num(kLeft + pw - 110) << "\" y=\"" << num(kTop + ph - 40 + 18 * it) << "\" fill=\""
      << colors[it] << "\" font-size=\"12\">Iteration " << it + 1 << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_report_json(const MissionReport& report, const fs::path& path) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json q = nlohmann::ordered_json::array();
  for (const auto& r : report.quantiles)
    q.push_back({{"metric", r.metric},
                 {"q", r.q},
                 {"iteration_1", r.iteration_1},
                 {"iteration_2", r.iteration_2},
                 {"delta", r.delta()}});
  j["quantiles"] = q;
  j["evaluator"] = {{"accuracy", report.evaluator_accuracy}, {"roc_auc", report.evaluator_auc}};
  j["plan"] = {{"waypoint_count", report.waypoint_count}, {"path_length", report.path_length}};
  j["frames"] = {{"iteration_1", report.frames_first}, {"iteration_2", report.frames_second}};
  j["pose_count"] = report.rows.size() / 2;
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

}  // namespace recap::mission
