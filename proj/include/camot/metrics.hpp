#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "camot/assignment.hpp"
#include "camot/io.hpp"
#include "camot/tracker.hpp"

namespace camot::metrics {

struct FrameCounts {
  long frame = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long num_gt = 0;
  long matches = 0;
};

struct EvalReport {
  double mota = 0.0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  double idf1 = 0.0;
  long num_gt = 0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
  std::vector<FrameCounts> per_frame;
};

namespace detail {

using FrameMap = std::map<long, std::vector<io::TrackRow>>;

inline FrameMap group_by_frame(const std::vector<io::TrackRow>& rows, const char* what) {
  FrameMap out;
  for (const auto& r : rows) out[r.frame].push_back(r);
  for (auto& [frame, v] : out) {
    std::set<int> ids;
    for (const auto& r : v) {
      if (!ids.insert(r.id).second) {
        throw invalid_input_error(std::string(what) + ": duplicate id " + std::to_string(r.id) +
                                  " in frame " + std::to_string(frame));
      }
    }
    std::sort(v.begin(), v.end(),
              [](const io::TrackRow& a, const io::TrackRow& b) { return a.id < b.id; });
  }
  return out;
}

} // namespace detail

/// CLEAR-MOT accumulation: per-frame IoU matching with carry-over preference
/// for the previous gt->pred pairing, Hungarian on the rest, and the usual
/// FP/FN/IDSw counts. An identity switch is counted whenever a ground-truth
/// trajectory's matched prediction id differs from its last known one.
inline EvalReport clear_mot(const std::vector<io::TrackRow>& gt,
                            const std::vector<io::TrackRow>& pred, double iou_gate = 0.5) {
  const auto gtf = detail::group_by_frame(gt, "gt");
  const auto prf = detail::group_by_frame(pred, "pred");

  std::set<long> frames;
  for (const auto& [f, v] : gtf) frames.insert(f);
  for (const auto& [f, v] : prf) frames.insert(f);

  EvalReport rep;
  std::map<int, int> last_match; // gt id -> pred id

  static const std::vector<io::TrackRow> kEmpty;
  for (long frame : frames) {
    const auto git = gtf.find(frame);
    const auto pit = prf.find(frame);
    const std::vector<io::TrackRow>& G = git != gtf.end() ? git->second : kEmpty;
    const std::vector<io::TrackRow>& P = pit != prf.end() ? pit->second : kEmpty;

    FrameCounts fc;
    fc.frame = frame;
    fc.num_gt = static_cast<long>(G.size());

    std::vector<char> g_done(G.size(), 0);
    std::vector<char> p_done(P.size(), 0);
    std::vector<std::pair<size_t, size_t>> matches;

    // Carry-over pass: keep still-valid pairs from earlier frames.
    for (size_t gi = 0; gi < G.size(); ++gi) {
      const auto lm = last_match.find(G[gi].id);
      if (lm == last_match.end()) continue;
      for (size_t pi = 0; pi < P.size(); ++pi) {
        if (p_done[pi] || P[pi].id != lm->second) continue;
        if (iou(G[gi].box, P[pi].box) >= iou_gate) {
          g_done[gi] = 1;
          p_done[pi] = 1;
          matches.emplace_back(gi, pi);
        }
        break;
      }
    }

    // Hungarian over the rest, maximizing IoU.
    std::vector<size_t> g_rest, p_rest;
    for (size_t gi = 0; gi < G.size(); ++gi) {
      if (!g_done[gi]) g_rest.push_back(gi);
    }
    for (size_t pi = 0; pi < P.size(); ++pi) {
      if (!p_done[pi]) p_rest.push_back(pi);
    }
    if (!g_rest.empty() && !p_rest.empty()) {
      Eigen::MatrixXd cost(g_rest.size(), p_rest.size());
      for (size_t r = 0; r < g_rest.size(); ++r) {
        for (size_t c = 0; c < p_rest.size(); ++c) {
          cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              -iou(G[g_rest[r]].box, P[p_rest[c]].box);
        }
      }
      const AssignmentResult ar = linear_assignment(cost, -iou_gate);
      for (const auto& [r, c] : ar.pairs) {
        matches.emplace_back(g_rest[static_cast<size_t>(r)], p_rest[static_cast<size_t>(c)]);
        g_done[g_rest[static_cast<size_t>(r)]] = 1;
        p_done[p_rest[static_cast<size_t>(c)]] = 1;
      }
    }

    for (const auto& [gi, pi] : matches) {
      const int gid = G[gi].id;
      const int pid = P[pi].id;
      const auto lm = last_match.find(gid);
      if (lm != last_match.end() && lm->second != pid) ++fc.idsw;
      last_match[gid] = pid;
    }
    fc.matches = static_cast<long>(matches.size());
    fc.fn = static_cast<long>(G.size()) - fc.matches;
    fc.fp = static_cast<long>(P.size()) - fc.matches;

    rep.fp += fc.fp;
    rep.fn += fc.fn;
    rep.idsw += fc.idsw;
    rep.num_gt += fc.num_gt;
    rep.per_frame.push_back(fc);
  }

  const double den = rep.num_gt > 0 ? static_cast<double>(rep.num_gt) : 1.0;
  rep.mota = 1.0 - static_cast<double>(rep.fp + rep.fn + rep.idsw) / den;
  return rep;
}

/// IDF1: identity-level bipartite matching over whole-sequence overlap counts
/// (frames where a gt/pred pair would match at the IoU gate), then
/// 2·IDTP / (2·IDTP + IDFP + IDFN).
inline EvalReport idf1(const std::vector<io::TrackRow>& gt, const std::vector<io::TrackRow>& pred,
                       double iou_gate = 0.5) {
  const auto gtf = detail::group_by_frame(gt, "gt");
  const auto prf = detail::group_by_frame(pred, "pred");

  std::map<int, long> gt_total, pr_total;
  std::map<std::pair<int, int>, long> overlap;
  for (const auto& [frame, G] : gtf) {
    for (const auto& g : G) ++gt_total[g.id];
    const auto pit = prf.find(frame);
    if (pit == prf.end()) continue;
    for (const auto& g : G) {
      for (const auto& p : pit->second) {
        if (iou(g.box, p.box) >= iou_gate) ++overlap[{g.id, p.id}];
      }
    }
  }
  for (const auto& [frame, P] : prf) {
    for (const auto& p : P) ++pr_total[p.id];
  }

  std::vector<int> gids, pids;
  for (const auto& [id, n] : gt_total) {
    (void)n;
    gids.push_back(id);
  }
  for (const auto& [id, n] : pr_total) {
    (void)n;
    pids.push_back(id);
  }

  long idtp = 0;
  if (!gids.empty() && !pids.empty()) {
    Eigen::MatrixXd cost(gids.size(), pids.size());
    for (size_t r = 0; r < gids.size(); ++r) {
      for (size_t c = 0; c < pids.size(); ++c) {
        const auto it = overlap.find({gids[r], pids[c]});
        cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            it == overlap.end() ? 0.0 : -static_cast<double>(it->second);
      }
    }
    // Gate at -0.5: pairs that never co-occur stay unmatched.
    const AssignmentResult ar = linear_assignment(cost, -0.5);
    for (const auto& [r, c] : ar.pairs) {
      idtp += static_cast<long>(-cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
  }

  long total_gt = 0, total_pr = 0;
  for (const auto& [id, n] : gt_total) {
    (void)id;
    total_gt += n;
  }
  for (const auto& [id, n] : pr_total) {
    (void)id;
    total_pr += n;
  }

  EvalReport rep;
  rep.idtp = idtp;
  rep.idfn = total_gt - idtp;
  rep.idfp = total_pr - idtp;
  const long den = total_gt + total_pr;
  rep.idf1 = den > 0 ? 2.0 * static_cast<double>(idtp) / static_cast<double>(den) : 1.0;
  return rep;
}

/// Convenience wrapper producing the full report used by the CLI.
inline EvalReport evaluate(const std::vector<io::TrackRow>& gt,
                           const std::vector<io::TrackRow>& pred, double iou_gate = 0.5) {
  EvalReport rep = clear_mot(gt, pred, iou_gate);
  const EvalReport idr = idf1(gt, pred, iou_gate);
  rep.idf1 = idr.idf1;
  rep.idtp = idr.idtp;
  rep.idfp = idr.idfp;
  rep.idfn = idr.idfn;
  return rep;
}

} // namespace camot::metrics
