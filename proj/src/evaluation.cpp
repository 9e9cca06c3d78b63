#include "poleloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "poleloc/textio.hpp"

namespace poleloc {

MatchReport match_poles(const PoleMap& detected, const PoleMap& truth,
                        double max_dist) {
  struct Pair {
    double dist;
    std::size_t det;
    std::size_t tru;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < detected.poles.size(); ++i) {
    for (std::size_t j = 0; j < truth.poles.size(); ++j) {
      const double d = std::hypot(detected.poles[i].x - truth.poles[j].x,
                                  detected.poles[i].y - truth.poles[j].y);
      if (d <= max_dist) pairs.push_back({d, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.det != b.det) return a.det < b.det;
    return a.tru < b.tru;
  });

  std::vector<char> det_used(detected.poles.size(), 0);
  std::vector<char> tru_used(truth.poles.size(), 0);
  MatchReport report;
  for (const Pair& p : pairs) {
    if (det_used[p.det] || tru_used[p.tru]) continue;
    det_used[p.det] = tru_used[p.tru] = 1;
    report.true_positives += 1;
    report.match_distances.push_back(p.dist);
    report.matches.emplace_back(static_cast<int>(p.det),
                                static_cast<int>(p.tru));
  }
  report.false_positives =
      static_cast<int>(detected.poles.size()) - report.true_positives;
  report.false_negatives =
      static_cast<int>(truth.poles.size()) - report.true_positives;
  return report;
}

Prf1 prf1(const MatchReport& report) {
  Prf1 out;
  const double tp = report.true_positives;
  const double det = tp + report.false_positives;
  const double tru = tp + report.false_negatives;
  out.precision = det > 0.0 ? tp / det : 0.0;
  out.recall = tru > 0.0 ? tp / tru : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall /
                     (out.precision + out.recall)
               : 0.0;
  return out;
}

namespace {

Pose2D interpolate(const TimedPose& a, const TimedPose& b, double t) {
  const double span = b.timestamp - a.timestamp;
  const double f = span > 0.0 ? (t - a.timestamp) / span : 0.0;
  Pose2D p;
  p.x = a.pose.x + f * (b.pose.x - a.pose.x);
  p.y = a.pose.y + f * (b.pose.y - a.pose.y);
  p.theta =
      normalize_angle(a.pose.theta + f * angle_diff(b.pose.theta, a.pose.theta));
  return p;
}

}  // namespace

TrajectoryErrors trajectory_errors(std::span<const TimedPose> estimate,
                                   std::span<const TimedPose> truth) {
  if (estimate.empty() || truth.empty())
    throw FormatError("trajectory_errors: empty trajectory");
  if (estimate.front().timestamp > truth.back().timestamp ||
      estimate.back().timestamp < truth.front().timestamp)
    throw FormatError("trajectory_errors: no temporal overlap");

  TrajectoryErrors out;
  double sum_pos = 0.0, sum_pos_sq = 0.0;
  double sum_ang = 0.0, sum_ang_sq = 0.0;
  std::size_t truth_idx = 0;
  for (const TimedPose& est : estimate) {
    const double t = est.timestamp;
    if (t < truth.front().timestamp || t > truth.back().timestamp) continue;
    while (truth_idx + 1 < truth.size() &&
           truth[truth_idx + 1].timestamp < t)
      ++truth_idx;
    const std::size_t hi = std::min(truth_idx + 1, truth.size() - 1);
    const Pose2D ref = interpolate(truth[truth_idx], truth[hi], t);

    const double pos_err = std::hypot(est.pose.x - ref.x, est.pose.y - ref.y);
    const double ang_err =
        std::abs(rad_to_deg(angle_diff(est.pose.theta, ref.theta)));
    sum_pos += pos_err;
    sum_pos_sq += pos_err * pos_err;
    sum_ang += ang_err;
    sum_ang_sq += ang_err * ang_err;
    out.samples += 1;
  }
  if (out.samples == 0)
    throw FormatError("trajectory_errors: no estimate sample inside truth");

  const double n = static_cast<double>(out.samples);
  out.mean_pos = sum_pos / n;
  out.rmse_pos = std::sqrt(sum_pos_sq / n);
  out.mean_ang_deg = sum_ang / n;
  out.rmse_ang_deg = std::sqrt(sum_ang_sq / n);
  return out;
}

std::string extraction_report(const MatchReport& report) {
  const Prf1 m = prf1(report);
  std::ostringstream out;
  out << "true_positives " << report.true_positives << '\n'
      << "false_positives " << report.false_positives << '\n'
      << "false_negatives " << report.false_negatives << '\n'
      << "precision " << format_g9(m.precision) << '\n'
      << "recall " << format_g9(m.recall) << '\n'
      << "f1 " << format_g9(m.f1) << '\n';
  return out.str();
}

std::string extraction_csv_row(const MatchReport& report, bool with_header) {
  const Prf1 m = prf1(report);
  std::ostringstream out;
  if (with_header) out << "tp,fp,fn,precision,recall,f1\n";
  out << report.true_positives << ',' << report.false_positives << ','
      << report.false_negatives << ',' << format_g9(m.precision) << ','
      << format_g9(m.recall) << ',' << format_g9(m.f1) << '\n';
  return out.str();
}

std::string trajectory_report(const TrajectoryErrors& e) {
  std::ostringstream out;
  out << "samples " << e.samples << '\n'
      << "delta_pos_m " << format_g9(e.mean_pos) << '\n'
      << "rmse_pos_m " << format_g9(e.rmse_pos) << '\n'
      << "delta_ang_deg " << format_g9(e.mean_ang_deg) << '\n'
      << "rmse_ang_deg " << format_g9(e.rmse_ang_deg) << '\n';
  return out.str();
}

std::string trajectory_csv_row(const TrajectoryErrors& e, bool with_header) {
  std::ostringstream out;
  if (with_header)
    out << "samples,delta_pos_m,rmse_pos_m,delta_ang_deg,rmse_ang_deg\n";
  out << e.samples << ',' << format_g9(e.mean_pos) << ','
      << format_g9(e.rmse_pos) << ',' << format_g9(e.mean_ang_deg) << ','
      << format_g9(e.rmse_ang_deg) << '\n';
  return out.str();
}

}  // namespace poleloc
