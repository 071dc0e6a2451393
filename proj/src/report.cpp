#include "resbo/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace resbo {

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

void write_run_csv(const RunRecord& record, const std::filesystem::path& path, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Eigen::Index dx = record.iterations.empty() ? 0 : record.iterations.front().x.size();
  const Eigen::Index dt = record.iterations.empty() ? 0 : record.iterations.front().theta.size();
  out << "#schema=" << kCsvSchemaVersion << ",problem=" << record.problem
      << ",acquisition=" << record.acquisition << ",seed=" << record.seed
      << ",complete=" << (record.complete ? 1 : 0) << "\n";
  out << "run_id,iteration";
  for (Eigen::Index i = 0; i < dx; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < dt; ++i) out << ",theta_" << i;
  out << ",y";
  for (Eigen::Index i = 0; i < dx; ++i) out << ",xstar_" << i;
  for (Eigen::Index i = 0; i < dt; ++i) out << ",thetastar_" << i;
  out << ",robust_regret,inference_regret,t_fit_s,t_sample_s,t_ep_s,t_acqopt_s\n";
  for (const IterationRecord& it : record.iterations) {
    out << record.run_id << "," << it.iteration;
    for (Eigen::Index i = 0; i < dx; ++i) out << "," << format_double(it.x[i]);
    for (Eigen::Index i = 0; i < dt; ++i) out << "," << format_double(it.theta[i]);
    out << "," << format_double(it.y);
    for (Eigen::Index i = 0; i < dx; ++i) out << "," << format_double(it.x_star[i]);
    for (Eigen::Index i = 0; i < dt; ++i) out << "," << format_double(it.theta_star[i]);
    out << "," << fmt_opt(it.robust_regret) << "," << fmt_opt(it.inference_regret);
    for (double t : {it.t_fit_s, it.t_sample_s, it.t_ep_s, it.t_acqopt_s})
      out << "," << format_double(timing ? t : 0.0);
    out << "\n";
  }
}

RunRecord read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#schema=", 0) != 0)
    throw std::runtime_error(path.string() + ": missing schema line");
  RunRecord rec;
  int version = -1;
  for (const std::string& kv : split(line.substr(1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "schema") version = std::stoi(v);
    if (k == "problem") rec.problem = v;
    if (k == "acquisition") rec.acquisition = v;
    if (k == "seed") rec.seed = std::stoull(v);
    if (k == "complete") rec.complete = v == "1";
  }
  if (version != kCsvSchemaVersion)
    throw std::runtime_error(path.string() + ": unsupported schema version " + std::to_string(version));
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
  const std::vector<std::string> header = split(line, ',');
  Eigen::Index dx = 0, dt = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) ++dx;
    if (h.rfind("theta_", 0) == 0) ++dt;
  }
  const std::size_t expected = static_cast<std::size_t>(2 + 2 * dx + 2 * dt + 1 + 6);
  if (header.size() != expected) throw std::runtime_error(path.string() + ": bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != expected) throw std::runtime_error(path.string() + ": bad row");
    std::size_t k = 0;
    IterationRecord it;
    rec.run_id = std::stoi(f[k++]);
    it.iteration = std::stoi(f[k++]);
    it.x.resize(dx);
    it.theta.resize(dt);
    it.x_star.resize(dx);
    it.theta_star.resize(dt);
    for (Eigen::Index i = 0; i < dx; ++i) it.x[i] = parse_double(f[k++]);
    for (Eigen::Index i = 0; i < dt; ++i) it.theta[i] = parse_double(f[k++]);
    it.y = parse_double(f[k++]);
    for (Eigen::Index i = 0; i < dx; ++i) it.x_star[i] = parse_double(f[k++]);
    for (Eigen::Index i = 0; i < dt; ++i) it.theta_star[i] = parse_double(f[k++]);
    it.robust_regret = parse_opt(f[k++]);
    it.inference_regret = parse_opt(f[k++]);
    it.t_fit_s = parse_double(f[k++]);
    it.t_sample_s = parse_double(f[k++]);
    it.t_ep_s = parse_double(f[k++]);
    it.t_acqopt_s = parse_double(f[k++]);
    rec.iterations.push_back(std::move(it));
  }
  return rec;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::size_t n = records.front().iterations.size();
  for (const auto& r : records) n = std::min(n, r.iterations.size());
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < n; ++i) {
    AggregateRow row;
    row.iteration = records.front().iterations[i].iteration;
    std::vector<double> rob, inf;
    for (const auto& r : records) {
      const IterationRecord& it = r.iterations[i];
      if (it.robust_regret) rob.push_back(*it.robust_regret);
      if (it.inference_regret) inf.push_back(*it.inference_regret);
    }
    if (rob.size() == records.size()) {
      row.robust_q25 = quantile_type7(rob, 0.25);
      row.robust_median = quantile_type7(rob, 0.5);
      row.robust_q75 = quantile_type7(rob, 0.75);
    }
    if (inf.size() == records.size()) {
      row.inference_q25 = quantile_type7(inf, 0.25);
      row.inference_median = quantile_type7(inf, 0.5);
      row.inference_q75 = quantile_type7(inf, 0.75);
    }
    out.push_back(row);
  }
  return out;
}

namespace {

struct Series {
  std::string label;
  std::vector<AggregateRow> rows;
};

void write_aggregate_csv(const std::vector<Series>& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "acquisition,iteration,robust_q25,robust_median,robust_q75,inference_q25,"
         "inference_median,inference_q75\n";
  for (const Series& s : series)
    for (const AggregateRow& r : s.rows)
      out << s.label << "," << r.iteration << "," << fmt_opt(r.robust_q25) << ","
          << fmt_opt(r.robust_median) << "," << fmt_opt(r.robust_q75) << ","
          << fmt_opt(r.inference_q25) << "," << fmt_opt(r.inference_median) << ","
          << fmt_opt(r.inference_q75) << "\n";
}

// Median with an interquartile band per series; robust regret when present.
void write_svg(const std::vector<Series>& series, const std::filesystem::path& path, bool log_y) {
  const double w = 640, h = 400, ml = 70, mr = 130, mt = 20, mb = 50;
  struct Pt {
    double x, lo, mid, hi;
  };
  std::vector<std::vector<Pt>> pts;
  bool robust = true;
  for (const Series& s : series)
    for (const AggregateRow& r : s.rows) robust = robust && r.robust_median.has_value();
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series) {
    std::vector<Pt> p;
    for (const AggregateRow& r : s.rows) {
      const auto lo = robust ? r.robust_q25 : r.inference_q25;
      const auto mid = robust ? r.robust_median : r.inference_median;
      const auto hi = robust ? r.robust_q75 : r.inference_q75;
      if (!mid) continue;
      p.push_back({static_cast<double>(r.iteration), *lo, *mid, *hi});
      xmin = std::min(xmin, p.back().x);
      xmax = std::max(xmax, p.back().x);
      for (double v : {*lo, *mid, *hi}) {
        if (log_y && v <= 0.0) continue;
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
    pts.push_back(std::move(p));
  }
  if (xmin > xmax) xmin = 0, xmax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymin > ymax) ymin = 1e-3, ymax = 1;
  if (log_y) {
    ymin = std::pow(10.0, std::floor(std::log10(ymin)));
    ymax = std::pow(10.0, std::ceil(std::log10(ymax)));
    if (ymax <= ymin) ymax = ymin * 10;
  } else if (ymax == ymin) {
    ymax = ymin + 1;
  }
  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  const auto sy = [&](double y) {
    double f;
    if (log_y) f = (std::log10(std::max(y, ymin)) - std::log10(ymin)) / (std::log10(ymax) - std::log10(ymin));
    else f = (y - ymin) / (ymax - ymin);
    return h - mb - f * (h - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">iteration</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">" << (robust ? "robust regret" : "inference regret") << "</text>\n";
  char buf[64];
  for (double y : {ymin, ymax}) {
    std::snprintf(buf, sizeof buf, "%.3g", y);
    out << "<text x=\"" << ml - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << buf
        << "</text>\n";
  }
  for (double x : {xmin, xmax}) {
    std::snprintf(buf, sizeof buf, "%g", x);
    out << "<text x=\"" << sx(x) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << buf
        << "</text>\n";
  }
  for (std::size_t s = 0; s < pts.size(); ++s) {
    const char* c = colors[s % 6];
    if (pts[s].empty()) continue;
    out << "<polygon fill=\"" << c << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const Pt& p : pts[s]) out << sx(p.x) << "," << sy(p.hi) << " ";
    for (auto it = pts[s].rbegin(); it != pts[s].rend(); ++it) out << sx(it->x) << "," << sy(it->lo) << " ";
    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (const Pt& p : pts[s]) out << sx(p.x) << "," << sy(p.mid) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << w - mr + 10 << "\" y=\"" << mt + 16 * (s + 1) << "\" fill=\"" << c << "\">"
        << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<Series> group(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<RunRecord>> by_label;
  for (const RunRecord& r : records) by_label[r.acquisition].push_back(r);
  std::vector<Series> out;
  for (const auto& [label, recs] : by_label) out.push_back({label, aggregate(recs)});
  return out;
}

}  // namespace

void aggregate_and_plot(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir,
                        bool timing, bool log_y) {
  if (records.empty()) throw std::invalid_argument("aggregate_and_plot: no records");
  std::filesystem::create_directories(out_dir);
  for (const RunRecord& r : records) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03d.csv", r.run_id);
    write_run_csv(r, out_dir / name, timing);
  }
  const std::vector<Series> series = group(records);
  write_aggregate_csv(series, out_dir / "aggregate.csv");
  write_svg(series, out_dir / "regret.svg", log_y);
}

std::vector<RunRecord> plot_directory(const std::filesystem::path& dir, bool log_y) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.rfind("run_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& f : files) records.push_back(read_run_csv(f));
  if (records.empty()) throw std::invalid_argument("no run_*.csv files in " + dir.string());
  const std::vector<Series> series = group(records);
  write_aggregate_csv(series, dir / "aggregate.csv");
  write_svg(series, dir / "regret.svg", log_y);
  return records;
}

}  // namespace resbo
