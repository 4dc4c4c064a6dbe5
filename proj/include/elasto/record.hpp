#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "propagator.hpp"
#include "snapshot.hpp"

namespace elasto {

// Frame files hold u, u_t, then w, w_t, v, v_t when split, then φ, φ_t.
inline void write_state_snapshot(const std::filesystem::path& path, const SimState& s) {
  std::vector<const RealScalarField*> comps;
  auto push = [&](const RealVectorField& f) {
    for (int c = 0; c < 3; ++c) comps.push_back(&f[c]);
  };
  push(s.u);
  push(s.ut);
  if (s.w && s.v) {
    push(s.w->f);
    push(s.w->ft);
    push(s.v->f);
    push(s.v->ft);
  }
  if (s.phi) {
    comps.push_back(&s.phi->f);
    comps.push_back(&s.phi->ft);
  }
  write_snapshot(path, comps, s.t, "state");
}

inline SimState read_state_snapshot(const std::filesystem::path& path, const GridSpec* expect = nullptr) {
  Snapshot snap = read_snapshot(path, expect);
  const int nc = int(snap.components.size());
  if (nc != 6 && nc != 8 && nc != 18 && nc != 20)
    throw SnapshotError("state snapshot " + path.string() + ": unexpected component count " + std::to_string(nc));
  SimState s;
  s.t = snap.time;
  s.u = snapshot_vector(snap, 0);
  s.ut = snapshot_vector(snap, 3);
  int next = 6;
  if (nc >= 18) {
    s.w = FieldPair{snapshot_vector(snap, 6), snapshot_vector(snap, 9)};
    s.v = FieldPair{snapshot_vector(snap, 12), snapshot_vector(snap, 15)};
    next = 18;
  }
  if (nc == next + 2) s.phi = ScalarPair{snap.components[next], snap.components[next + 1]};
  return s;
}

struct DuhamelSummary {
  SpectralPair integral;  // ∫_0^T S(-τ)(0, G(τ)) dτ
  double horizon = 0.0;
  double tail_estimate = 0.0;
  double source_h1_integral = 0.0;                          // ∫_0^T ‖G‖_{H¹}
  std::vector<std::pair<double, double>> source_l2_norms;  // (τ, ‖G(τ)‖)
};

// Frames of one run, kept in memory or as snapshot files in a directory.
class RunRecord {
 public:
  RunRecord() = default;
  RunRecord(const GridSpec& g, const MaterialParams& mp, double dt) : grid_(g), mp_(mp), dt_(dt) {}

  void store_in(std::filesystem::path dir) {
    if (!frames_.empty() || !times_.empty()) throw std::logic_error("run record: storage must be chosen before frames");
    std::filesystem::create_directories(dir);
    dir_ = std::move(dir);
  }

  void add_frame(const SimState& s) {
    require_same_grid(s.grid(), grid_);
    if (!times_.empty() && !(s.t > times_.back())) throw std::invalid_argument("run record: frame times must increase");
    if (dir_) {
      write_state_snapshot(frame_path(times_.size()), s);
    } else {
      frames_.push_back(s);
    }
    times_.push_back(s.t);
  }

  std::size_t frames() const { return times_.size(); }
  double time(std::size_t i) const { return times_.at(i); }
  const std::vector<double>& times() const { return times_; }
  const GridSpec& grid() const { return grid_; }
  const MaterialParams& material() const { return mp_; }
  double dt() const { return dt_; }
  bool on_disk() const { return dir_.has_value(); }

  SimState frame(std::size_t i) const {
    if (i >= times_.size()) throw std::out_of_range("run record: frame index " + std::to_string(i) + " out of range");
    if (dir_) return read_state_snapshot(frame_path(i), &grid_);
    return frames_[i];
  }

  // Index of the frame closest to t.
  std::size_t nearest_frame(double t) const {
    if (times_.empty()) throw std::invalid_argument("run record: no frames");
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return times_.size() - 1;
    std::size_t i = std::size_t(it - times_.begin());
    if (i > 0 && t - times_[i - 1] < *it - t) --i;
    return i;
  }

  std::filesystem::path frame_path(std::size_t i) const {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.snap", i);
    return *dir_ / name;
  }

  std::optional<DuhamelSummary> duhamel;

 private:
  GridSpec grid_;
  MaterialParams mp_;
  double dt_ = 0.0;
  std::vector<double> times_;
  std::vector<SimState> frames_;
  std::optional<std::filesystem::path> dir_;
};

struct RecordOptions {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t stride = 1;  // a frame every `stride` steps, plus the first and last
  StepperOptions stepper;
  bool duhamel = false;  // stream G into a Simpson accumulator (needs an even step count)
  std::optional<std::filesystem::path> directory;
  std::function<void(const SimState&)> on_frame;
};

// Run the stepper from `initial` and record frames. NaN or Inf in u aborts
// with NumericalError.
inline RunRecord record_run(const SimState& initial, const MaterialParams& mp, const RecordOptions& opt) {
  if (opt.steps == 0) throw std::invalid_argument("record_run: need at least one step");
  if (opt.stride == 0) throw std::invalid_argument("record_run: stride must be positive");
  if (opt.duhamel && opt.steps % 2 != 0)
    throw std::invalid_argument("record_run: Simpson quadrature of the Duhamel integral needs an even step count");
  if (opt.duhamel && initial.t != 0.0) throw std::invalid_argument("record_run: Duhamel data must start at t = 0");

  RunRecord rec(initial.grid(), mp, opt.dt);
  if (opt.directory) rec.store_in(*opt.directory);

  Stepper st(initial.grid(), mp, opt.stepper);
  st.set_state(initial);
  std::optional<DuhamelAccumulator> acc;
  if (opt.duhamel) {
    acc.emplace(initial.grid(), mp, opt.dt);
    st.on_source_sample = [&](double t, const SpectralVectorField& G) { acc->add(t, G); };
  }

  auto emit = [&](const SimState& s) {
    for (const auto* f : {&s.u, &s.ut})
      if (!all_finite(*f)) throw NumericalError("non-finite field at t=" + std::to_string(s.t));
    rec.add_frame(s);
    if (opt.on_frame) opt.on_frame(s);
  };
  emit(st.state());
  for (std::size_t i = 1; i <= opt.steps; ++i) {
    st.step(opt.dt);
    if (i % opt.stride == 0 || i == opt.steps) emit(st.state());
  }

  if (acc) {
    if (mp.is_linear()) {
      acc->add(double(opt.steps) * opt.dt, SpectralVectorField(initial.grid()));
    } else {
      acc->add(double(opt.steps) * opt.dt, st.sources_at(st.u().u).source_w());
    }
    DuhamelSummary d{acc->integral(), acc->horizon(), acc->tail_estimate(), acc->source_h1_integral(),
                     acc->source_norms()};
    rec.duhamel = std::move(d);
  }
  return rec;
}

}  // namespace elasto
