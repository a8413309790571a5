#include "fatigue/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fatigue::stats {

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::DegenerateTest, "mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw Error(Errc::DegenerateTest, "variance needs at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0) || std::isnan(t)) {
    throw Error(Errc::DegenerateTest, "t distribution needs df > 0 and finite t");
  }
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

StatResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::LengthMismatch, "paired t needs equal-length samples (" +
                                          std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw Error(Errc::DegenerateTest, "paired t needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double var = sample_variance(d);
  if (!(var > 0.0)) throw Error(Errc::DegenerateTest, "differences have zero variance");
  const auto n = static_cast<double>(d.size());
  StatResult r;
  r.kind = TestKind::PairedT;
  r.t = mean(d) / std::sqrt(var / n);
  r.df = n - 1.0;
  r.p = t_two_sided_p(r.t, r.df);
  r.n1 = r.n2 = d.size();
  return r;
}

StatResult two_sample_t(std::span<const double> a, std::span<const double> b,
                        VarianceForm form) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Errc::DegenerateTest, "two-sample t needs at least two values per group");
  }
  const double va = sample_variance(a), vb = sample_variance(b);
  if (!(va > 0.0) && !(vb > 0.0)) {
    throw Error(Errc::DegenerateTest, "both groups have zero variance");
  }
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  StatResult r;
  r.kind = TestKind::TwoSampleT;
  r.n1 = a.size();
  r.n2 = b.size();
  if (form == VarianceForm::Welch) {
    const double sa = va / na, sb = vb / nb;
    r.t = diff / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  } else {
    r.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    r.t = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  }
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

std::string_view to_string(Eye e) { return e == Eye::Left ? "LEFT" : "RIGHT"; }
std::string_view to_string(Signal s) {
  return s == Signal::Position ? "POSITION" : "ORIENTATION";
}

double gaze_variance(const Recording& rec, Signal signal, Eye eye) {
  const bool left = eye == Eye::Left;
  std::array<std::vector<double>, 3> comp;
  std::size_t dims = 0;
  if (signal == Signal::Orientation) {
    dims = 2;
    for (const auto& s : rec.samples) {
      const double h = left ? s.lx : s.rx, v = left ? s.ly : s.ry;
      if (std::isnan(h) || std::isnan(v)) continue;
      comp[0].push_back(h);
      comp[1].push_back(v);
    }
  } else {
    dims = 3;
    for (const auto& s : rec.samples) {
      const auto& p = left ? s.pos_l : s.pos_r;
      if (!p || !p->allFinite()) continue;
      for (int k = 0; k < 3; ++k) comp[static_cast<std::size_t>(k)].push_back((*p)(k));
    }
  }
  if (comp[0].size() < 2) {
    throw Error(Errc::MissingSignal, std::string(to_string(signal)) + " of the " +
                                         std::string(to_string(eye)) + " eye missing in " +
                                         rec.participant_id + "/" +
                                         std::string(to_string(rec.task)));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < dims; ++k) total += sample_variance(comp[k]);
  return total;
}

VarianceSummary summarize_variance(const SessionIndex& index, Task task, Signal signal, Eye eye) {
  VarianceSummary out;
  out.task = task;
  out.eye = eye;
  out.signal = signal;
  for (const auto& pid : index.participants(task)) {
    std::optional<bool> label;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : index.lookup(pid, task)) {
      const SessionMeta* m = index.meta(e);
      if (m == nullptr || !m->fatigue_label) continue;
      label = *m->fatigue_label;
      try {
        sum += gaze_variance(index.recording(e.recording), signal, eye);
        ++n;
      } catch (const Error& err) {
        if (err.code() != Errc::MissingSignal) throw;
      }
    }
    if (!label || n == 0) continue;
    out.participants.push_back(pid);
    out.values.push_back(sum / static_cast<double>(n));
    out.fatigued.push_back(*label);
  }
  return out;
}

std::vector<VarianceRow> variance_battery(const SessionIndex& index) {
  std::vector<VarianceRow> rows;
  for (Task task : kAllTasks) {
    for (Eye eye : {Eye::Left, Eye::Right}) {
      for (Signal signal : {Signal::Position, Signal::Orientation}) {
        VarianceRow row;
        row.task = task;
        row.eye = eye;
        row.signal = signal;
        const auto s = summarize_variance(index, task, signal, eye);
        std::vector<double> nf, f;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
          (s.fatigued[i] ? f : nf).push_back(s.values[i]);
        }
        row.n_no_fatigue = nf.size();
        row.n_fatigue = f.size();
        row.mean_no_fatigue = nf.empty() ? std::nan("") : mean(nf);
        row.mean_fatigue = f.empty() ? std::nan("") : mean(f);
        try {
          row.welch = two_sample_t(nf, f, VarianceForm::Welch);
          row.pooled = two_sample_t(nf, f, VarianceForm::Pooled);
        } catch (const Error& e) {
          if (e.code() != Errc::DegenerateTest) throw;
          row.note = e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<SubjectiveRow> subjective_battery(std::span<const SessionMeta> metas,
                                              VarianceForm form,
                                              std::vector<std::string>& warnings) {
  // first row per participant
  std::vector<const SessionMeta*> people;
  std::set<std::string> seen;
  for (const auto& m : metas) {
    if (seen.insert(m.participant_id).second) people.push_back(&m);
  }

  std::vector<SubjectiveRow> rows;
  for (Measure measure : kAllMeasures) {
    std::array<std::vector<double>, 2> pre, post, delta;  // [0] no fatigue, [1] fatigue
    for (const SessionMeta* m : people) {
      const Rating& r = m->rating(measure);
      if (!m->fatigue_label || !r.pre || !r.post) continue;
      const std::size_t g = *m->fatigue_label ? 1 : 0;
      pre[g].push_back(*r.pre);
      post[g].push_back(*r.post);
      delta[g].push_back(*r.post - *r.pre);
    }
    if (pre[0].empty() && pre[1].empty()) {
      warnings.push_back(std::string(to_string(measure)) +
                         ": no participant with a label and both ratings; skipped");
      continue;
    }
    SubjectiveRow row;
    row.measure = measure;
    auto means = [&](std::size_t g) {
      GroupMeans gm;
      gm.n = pre[g].size();
      if (gm.n > 0) {
        gm.pre = mean(pre[g]);
        gm.post = mean(post[g]);
        gm.delta = mean(delta[g]);
      } else {
        gm.pre = gm.post = gm.delta = std::nan("");
      }
      return gm;
    };
    row.no_fatigue = means(0);
    row.fatigue = means(1);
    auto attempt = [&](const char* what, auto&& fn) -> std::optional<StatResult> {
      try {
        return fn();
      } catch (const Error& e) {
        if (e.code() != Errc::DegenerateTest && e.code() != Errc::LengthMismatch) throw;
        row.notes.push_back(std::string(what) + ": " + e.what());
        return std::nullopt;
      }
    };
    row.pre_group = attempt("pre group", [&] { return two_sample_t(pre[0], pre[1], form); });
    row.post_group = attempt("post group", [&] { return two_sample_t(post[0], post[1], form); });
    row.paired_no_fatigue = attempt("paired no fatigue", [&] { return paired_t(pre[0], post[0]); });
    row.paired_fatigue = attempt("paired fatigue", [&] { return paired_t(pre[1], post[1]); });
    row.delta_group =
        attempt("delta group", [&] { return two_sample_t(delta[0], delta[1], form); });
    rows.push_back(std::move(row));
  }
  return rows;
}

MetadataSummary summarize_metadata(std::span<const SessionMeta> metas) {
  MetadataSummary s;
  std::set<std::string> seen;
  double hs_f = 0.0, hs_nf = 0.0, age = 0.0;
  std::size_t n_hs_f = 0, n_hs_nf = 0, n_age = 0;
  for (const auto& m : metas) {
    if (!seen.insert(m.participant_id).second) continue;
    ++s.participants;
    if (!m.fatigue_label) {
      ++s.unlabelled;
    } else if (*m.fatigue_label) {
      ++s.fatigued;
      if (m.hours_slept) {
        hs_f += *m.hours_slept;
        ++n_hs_f;
      }
    } else {
      ++s.non_fatigued;
      if (m.hours_slept) {
        hs_nf += *m.hours_slept;
        ++n_hs_nf;
      }
    }
    if (m.age) {
      age += *m.age;
      ++n_age;
    }
    if (m.gender == Gender::Female) ++s.female;
    if (m.gender == Gender::Male) ++s.male;
  }
  if (n_hs_f > 0) s.hours_slept_fatigued = hs_f / static_cast<double>(n_hs_f);
  if (n_hs_nf > 0) s.hours_slept_non_fatigued = hs_nf / static_cast<double>(n_hs_nf);
  if (n_age > 0) s.mean_age = age / static_cast<double>(n_age);
  return s;
}

std::vector<VariancePoint> variance_series(const SessionIndex& index, Task task, Signal signal,
                                           Eye eye, double window_s, double stride_s) {
  if (!(window_s > 0.0) || !(stride_s > 0.0)) {
    throw Error(Errc::InvalidConfig, "variance window and stride must be positive");
  }
  // (fatigued, window index) -> (sum, count)
  std::map<std::pair<bool, std::size_t>, std::pair<double, std::size_t>> acc;
  for (const auto& pid : index.participants(task)) {
    for (const auto& e : index.lookup(pid, task)) {
      const SessionMeta* m = index.meta(e);
      if (m == nullptr || !m->fatigue_label) continue;
      const Recording& rec = index.recording(e.recording);
      const auto win = static_cast<std::size_t>(std::llround(window_s * rec.sample_rate_hz));
      const auto stride = static_cast<std::size_t>(std::llround(stride_s * rec.sample_rate_hz));
      if (win < 2 || stride < 1) continue;
      Recording slice;
      slice.participant_id = rec.participant_id;
      slice.task = rec.task;
      for (std::size_t start = 0, w = 0; start + win <= rec.samples.size();
           start += stride, ++w) {
        slice.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(start),
                             rec.samples.begin() + static_cast<std::ptrdiff_t>(start + win));
        double v = 0.0;
        try {
          v = gaze_variance(slice, signal, eye);
        } catch (const Error& err) {
          if (err.code() != Errc::MissingSignal) throw;
          continue;
        }
        auto& a = acc[{*m->fatigue_label, w}];
        a.first += v;
        a.second += 1;
      }
    }
  }
  std::vector<VariancePoint> out;
  for (const auto& [key, a] : acc) {
    VariancePoint p;
    p.task = task;
    p.eye = eye;
    p.signal = signal;
    p.fatigued = key.first;
    p.time_s = static_cast<double>(key.second) * stride_s;
    p.variance = a.first / static_cast<double>(a.second);
    p.n = a.second;
    out.push_back(p);
  }
  return out;
}

}  // namespace fatigue::stats
