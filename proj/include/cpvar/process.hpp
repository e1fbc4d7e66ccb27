// Counting-process paths, observed subjects and samples.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cpvar/stepfn.hpp"

namespace cpvar {

/// A counting process N given by its event times T_1 <= T_2 <= ...
///
/// Repeated times encode simultaneous events, so a time listed k times is a
/// jump of size k. N(0) = 0 and N(inf) is the number of stored times.
class CountingPath {
 public:
  CountingPath() = default;
  explicit CountingPath(std::vector<double> event_times);

  std::span<const double> event_times() const noexcept { return times_; }
  std::size_t total() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  // N(t), or N(t-) for the left limit.
  double operator()(double t, Side side = Side::right) const;

  StepFunction as_step() const;

  friend bool operator==(const CountingPath&, const CountingPath&) = default;

 private:
  std::vector<double> times_;
};

// Censoring time C observed for every subject.
struct ObservedCensoring {
  double c;
  friend bool operator==(const ObservedCensoring&,
                         const ObservedCensoring&) = default;
};

// C observed only when it precedes the terminal event: c_tilde = C ^ T and
// d_tilde = 1{C < T}.
struct CensoredCensoring {
  double c_tilde;
  bool d_tilde;
  friend bool operator==(const CensoredCensoring&,
                         const CensoredCensoring&) = default;
};

using Design = std::variant<ObservedCensoring, CensoredCensoring>;

enum class DesignKind { uncensored, observed, censored };

DesignKind parse_design(std::string_view name);
std::string_view design_name(DesignKind kind);

struct Subject {
  std::int64_t id = 0;
  CountingPath path;  // observed events, all <= follow-up
  Design design;
  std::optional<double> z;

  double followup() const;
  friend bool operator==(const Subject&, const Subject&) = default;
};

/// Nonempty, design-homogeneous collection of subjects.
class Sample {
 public:
  explicit Sample(std::vector<Subject> subjects);

  std::span<const Subject> subjects() const noexcept { return subjects_; }
  std::size_t size() const noexcept { return subjects_.size(); }
  const Subject& operator[](std::size_t i) const { return subjects_[i]; }
  bool observed_censoring() const {
    return std::holds_alternative<ObservedCensoring>(subjects_.front().design);
  }
  std::vector<CountingPath> paths() const;

  // Copy with subject i removed; requires size() >= 2.
  Sample without(std::size_t i) const;

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  std::vector<Subject> subjects_;
};

// Simple paths N^(k), k = 1..N(inf), the k-th jumping once at T_k.
std::vector<CountingPath> decompose(const CountingPath& path);

// F_n = n^-1 sum_i N_i.
StepFunction empirical_mean(std::span<const CountingPath> paths);

// Events u with u <= c are kept. c = +inf leaves the path unchanged.
CountingPath censor_path(const CountingPath& full, double c);

// Subjects CSV `id,followup,reason,z` joined with events CSV `id,time`.
// `requested` decides how an all-`censoring` file is read: observed and
// uncensored yield ObservedCensoring (and reject `terminal` rows), censored
// yields CensoredCensoring.
Sample read_sample(std::istream& subjects, std::istream& events,
                   DesignKind requested);
Sample read_sample(const std::filesystem::path& subjects,
                   const std::filesystem::path& events, DesignKind requested);

void write_sample(const Sample& sample, std::ostream& subjects,
                  std::ostream& events);

}  // namespace cpvar
