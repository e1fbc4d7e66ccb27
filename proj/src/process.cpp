#include "cpvar/process.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "cpvar/csv.hpp"
#include "cpvar/error.hpp"

namespace cpvar {

CountingPath::CountingPath(std::vector<double> event_times)
    : times_(std::move(event_times)) {
  for (double t : times_) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InvalidArgument("event times must be finite and > 0, got " +
                            std::to_string(t));
    }
  }
  std::sort(times_.begin(), times_.end());
}

double CountingPath::operator()(double t, Side side) const {
  const auto it = side == Side::right
                      ? std::upper_bound(times_.begin(), times_.end(), t)
                      : std::lower_bound(times_.begin(), times_.end(), t);
  return static_cast<double>(it - times_.begin());
}

StepFunction CountingPath::as_step() const {
  std::vector<Jump> j;
  j.reserve(times_.size());
  for (std::size_t k = 0; k < times_.size();) {
    std::size_t e = k;
    while (e < times_.size() && times_[e] == times_[k]) ++e;
    j.push_back({times_[k], static_cast<double>(e - k)});
    k = e;
  }
  return StepFunction(0.0, std::move(j));
}

DesignKind parse_design(std::string_view name) {
  if (name == "uncensored") return DesignKind::uncensored;
  if (name == "observed") return DesignKind::observed;
  if (name == "censored") return DesignKind::censored;
  throw InvalidArgument("unknown design '" + std::string(name) +
                        "' (expected uncensored, observed or censored)");
}

std::string_view design_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::uncensored: return "uncensored";
    case DesignKind::observed: return "observed";
    case DesignKind::censored: return "censored";
  }
  return "?";
}

double Subject::followup() const {
  return std::visit(
      [](const auto& d) {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>,
                                     ObservedCensoring>) {
          return d.c;
        } else {
          return d.c_tilde;
        }
      },
      design);
}

Sample::Sample(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
  if (subjects_.empty()) throw InvalidArgument("sample must not be empty");
  const auto kind = subjects_.front().design.index();
  for (const auto& s : subjects_) {
    if (s.design.index() != kind) {
      throw InvalidArgument("sample mixes observed and censored designs");
    }
    const double f = s.followup();
    if (!(f > 0.0) || std::isnan(f)) {
      throw InvalidArgument("follow-up of subject " + std::to_string(s.id) +
                            " must be > 0");
    }
    if (!s.path.empty() && s.path.event_times().back() > f) {
      throw InvalidArgument("subject " + std::to_string(s.id) +
                            " has an event after its follow-up");
    }
  }
}

std::vector<CountingPath> Sample::paths() const {
  std::vector<CountingPath> out;
  out.reserve(subjects_.size());
  for (const auto& s : subjects_) out.push_back(s.path);
  return out;
}

Sample Sample::without(std::size_t i) const {
  if (subjects_.size() < 2 || i >= subjects_.size()) {
    throw InvalidArgument("leave-one-out needs at least two subjects");
  }
  std::vector<Subject> rest;
  rest.reserve(subjects_.size() - 1);
  for (std::size_t k = 0; k < subjects_.size(); ++k) {
    if (k != i) rest.push_back(subjects_[k]);
  }
  return Sample(std::move(rest));
}

std::vector<CountingPath> decompose(const CountingPath& path) {
  std::vector<CountingPath> out;
  out.reserve(path.total());
  for (double t : path.event_times()) out.emplace_back(std::vector<double>{t});
  return out;
}

StepFunction empirical_mean(std::span<const CountingPath> paths) {
  if (paths.empty()) {
    throw InvalidArgument("empirical mean of an empty set of paths");
  }
  std::vector<double> all;
  for (const auto& p : paths) {
    all.insert(all.end(), p.event_times().begin(), p.event_times().end());
  }
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(paths.size());
  std::vector<Jump> j;
  for (std::size_t k = 0; k < all.size();) {
    std::size_t e = k;
    while (e < all.size() && all[e] == all[k]) ++e;
    j.push_back({all[k], static_cast<double>(e - k) / n});
    k = e;
  }
  return StepFunction(0.0, std::move(j));
}

CountingPath censor_path(const CountingPath& full, double c) {
  const auto times = full.event_times();
  const auto end = std::upper_bound(times.begin(), times.end(), c);
  return CountingPath(std::vector<double>(times.begin(), end));
}

namespace {

constexpr std::string_view kSubjectsHeader = "id,followup,reason,z";
constexpr std::string_view kEventsHeader = "id,time";

}  // namespace

Sample read_sample(std::istream& subjects_in, std::istream& events_in,
                   DesignKind requested) {
  const auto st = csv::read(subjects_in, kSubjectsHeader, "subjects file");
  const auto et = csv::read(events_in, kEventsHeader, "events file");
  if (st.rows.empty()) throw FormatError("subjects file has no rows");

  struct Row {
    std::int64_t id;
    double followup;
    bool terminal;
    std::optional<double> z;
  };
  std::vector<Row> rows;
  bool any_terminal = false;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& f = st.rows[r];
    const std::string where = "subjects line " + std::to_string(st.lines[r]);
    Row row{};
    row.id = csv::parse_int(f[0], where);
    row.followup = csv::parse_double(f[1], where);
    if (!(row.followup > 0.0)) {
      throw FormatError(where + ": followup must be > 0");
    }
    if (f[2] == "censoring") {
      row.terminal = false;
    } else if (f[2] == "terminal") {
      row.terminal = true;
      any_terminal = true;
    } else {
      throw FormatError(where + ": unknown reason '" + f[2] + "'");
    }
    if (!f[3].empty()) row.z = csv::parse_double(f[3], where);
    if (!rows.empty() && row.id <= rows.back().id) {
      throw FormatError(where + ": subject ids must be strictly increasing (" +
                        std::to_string(row.id) + ")");
    }
    rows.push_back(row);
  }
  if (requested != DesignKind::censored && any_terminal) {
    throw FormatError("subjects file has terminal rows but design " +
                      std::string(design_name(requested)) +
                      " requires all rows to be censoring");
  }

  std::map<std::int64_t, std::size_t> index;
  for (std::size_t r = 0; r < rows.size(); ++r) index[rows[r].id] = r;
  std::vector<std::vector<double>> times(rows.size());
  for (std::size_t r = 0; r < et.rows.size(); ++r) {
    const auto& f = et.rows[r];
    const std::string where = "events line " + std::to_string(et.lines[r]);
    const auto id = csv::parse_int(f[0], where);
    const auto it = index.find(id);
    if (it == index.end()) {
      throw FormatError(where + ": unknown subject id " + std::to_string(id));
    }
    const double t = csv::parse_double(f[1], where);
    if (!(t > 0.0)) throw FormatError(where + ": event time must be > 0");
    if (t > rows[it->second].followup) {
      throw FormatError(where + ": event at " + csv::format(t) +
                        " after follow-up " +
                        csv::format(rows[it->second].followup) +
                        " of subject " + std::to_string(id));
    }
    times[it->second].push_back(t);
  }

  std::vector<Subject> subjects;
  subjects.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Subject s;
    s.id = rows[r].id;
    s.path = CountingPath(std::move(times[r]));
    if (requested == DesignKind::censored) {
      s.design = CensoredCensoring{rows[r].followup, !rows[r].terminal};
    } else {
      s.design = ObservedCensoring{rows[r].followup};
    }
    s.z = rows[r].z;
    subjects.push_back(std::move(s));
  }
  return Sample(std::move(subjects));
}

Sample read_sample(const std::filesystem::path& subjects,
                   const std::filesystem::path& events, DesignKind requested) {
  std::ifstream s(subjects);
  if (!s) throw FormatError("cannot open " + subjects.string());
  std::ifstream e(events);
  if (!e) throw FormatError("cannot open " + events.string());
  return read_sample(s, e, requested);
}

void write_sample(const Sample& sample, std::ostream& subjects,
                  std::ostream& events) {
  subjects << kSubjectsHeader << '\n';
  events << kEventsHeader << '\n';
  for (const auto& s : sample.subjects()) {
    bool terminal = false;
    if (const auto* cc = std::get_if<CensoredCensoring>(&s.design)) {
      terminal = !cc->d_tilde;
    }
    subjects << s.id << ',' << csv::format_exact(s.followup()) << ','
             << (terminal ? "terminal" : "censoring") << ','
             << (s.z ? csv::format_exact(*s.z) : std::string()) << '\n';
    for (double t : s.path.event_times()) {
      events << s.id << ',' << csv::format_exact(t) << '\n';
    }
  }
}

}  // namespace cpvar
