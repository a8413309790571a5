#include "fatigue/ingest.hpp"

#include "fatigue/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>

namespace fatigue {

namespace {

constexpr double kMaxAngle = 90.0;

struct ColumnIndex {
  std::unordered_map<std::string, std::size_t> by_name;

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    auto i = find(name);
    if (!i) throw Error(Errc::MissingColumn, "column '" + name + "' not found");
    return *i;
  }
  std::optional<std::array<std::size_t, 3>> triple(const std::array<std::string, 3>& names) const {
    std::array<std::size_t, 3> out{};
    for (std::size_t k = 0; k < 3; ++k) {
      auto i = find(names[k]);
      if (!i) return std::nullopt;
      out[k] = *i;
    }
    return out;
  }
};

ColumnIndex read_header(const std::string& line) {
  ColumnIndex idx;
  auto fields = util::split_csv_line(line);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string name(util::trim(fields[i]));
    // strip UTF-8 BOM on the first column
    if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0) name.erase(0, 3);
    idx.by_name.emplace(std::move(name), i);
  }
  return idx;
}

std::string_view field(const std::vector<std::string>& row, std::size_t i) {
  return i < row.size() ? std::string_view(row[i]) : std::string_view();
}

double angle_field(const std::vector<std::string>& row, std::size_t i, std::size_t& out_of_range) {
  auto v = util::parse_double(field(row, i));
  if (!v || !std::isfinite(*v)) return kMissing;
  if (std::abs(*v) > kMaxAngle) {
    ++out_of_range;
    return kMissing;
  }
  return *v;
}

std::optional<Eigen::Vector3d> vec_field(const std::vector<std::string>& row,
                                         const std::optional<std::array<std::size_t, 3>>& cols,
                                         bool unit) {
  if (!cols) return std::nullopt;
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) {
    auto d = util::parse_double(field(row, (*cols)[static_cast<std::size_t>(k)]));
    if (!d || !std::isfinite(*d)) return std::nullopt;
    v[k] = *d;
  }
  if (unit) {
    double norm = v.norm();
    if (!(norm > 0.0)) return std::nullopt;
    v /= norm;
  }
  return v;
}

}  // namespace

std::size_t Recording::gap_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const GazeSample& s) { return s.gap(); }));
}

std::string ParseReport::to_json_line() const {
  nlohmann::json j;
  j["path"] = path;
  j["rows"] = rows;
  j["gaps"] = gaps;
  j["duplicates_dropped"] = duplicates_dropped;
  j["warnings"] = warnings;
  j["errors"] = errors;
  return j.dump();
}

std::optional<RecordingKey> key_from_filename(const std::string& filename,
                                              const ColumnSchema& schema) {
  std::regex re(schema.filename_pattern);
  std::smatch m;
  if (!std::regex_match(filename, m, re) || m.size() < 4) return std::nullopt;
  auto task = parse_task(m[3].str());
  if (!task) return std::nullopt;
  return RecordingKey{m[1].str(), m[2].str(), *task};
}

Recording parse_recording(std::istream& in, const RecordingKey& key, const ColumnSchema& schema,
                          ParseReport& report) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyRecording, "no header row");
  const ColumnIndex cols = read_header(line);

  const std::size_t c_n = cols.require(schema.n);
  const std::array<std::size_t, 6> c_ang = {cols.require(schema.x),  cols.require(schema.y),
                                            cols.require(schema.lx), cols.require(schema.ly),
                                            cols.require(schema.rx), cols.require(schema.ry)};
  const auto c_pos_l = cols.triple(schema.pos_l);
  const auto c_pos_r = cols.triple(schema.pos_r);
  const auto c_dir_l = cols.triple(schema.dir_l);
  const auto c_dir_r = cols.triple(schema.dir_r);

  Recording rec;
  rec.participant_id = key.participant_id;
  rec.session_id = key.session_id;
  rec.task = key.task;
  rec.sample_rate_hz = schema.sample_rate_hz;

  std::size_t out_of_range = 0;
  std::size_t bad_time = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    ++report.rows;
    auto row = util::split_csv_line(line);
    auto n = util::parse_double(field(row, c_n));
    if (!n || !std::isfinite(*n)) {
      ++bad_time;
      continue;
    }
    if (!rec.samples.empty()) {
      double prev = rec.samples.back().n;
      if (*n == prev) {
        ++report.duplicates_dropped;
        continue;
      }
      if (*n < prev) {
        throw Error(Errc::NonMonotoneTime, "timestamp decreases at line " +
                                               std::to_string(line_no) + " (" +
                                               util::format_double(*n) + " < " +
                                               util::format_double(prev) + ")");
      }
    }
    GazeSample s;
    s.n = *n;
    s.x = angle_field(row, c_ang[0], out_of_range);
    s.y = angle_field(row, c_ang[1], out_of_range);
    s.lx = angle_field(row, c_ang[2], out_of_range);
    s.ly = angle_field(row, c_ang[3], out_of_range);
    s.rx = angle_field(row, c_ang[4], out_of_range);
    s.ry = angle_field(row, c_ang[5], out_of_range);
    s.pos_l = vec_field(row, c_pos_l, false);
    s.pos_r = vec_field(row, c_pos_r, false);
    s.dir_l = vec_field(row, c_dir_l, true);
    s.dir_r = vec_field(row, c_dir_r, true);
    rec.samples.push_back(std::move(s));
  }

  if (rec.samples.empty()) throw Error(Errc::EmptyRecording, "no samples");

  report.gaps = rec.gap_count();
  if (report.duplicates_dropped > 0) {
    report.warnings.push_back("dropped " + std::to_string(report.duplicates_dropped) +
                              " duplicate timestamps");
  }
  if (out_of_range > 0) {
    report.warnings.push_back(std::to_string(out_of_range) +
                              " angle values beyond 90 dva treated as missing");
  }
  if (bad_time > 0) {
    report.warnings.push_back(std::to_string(bad_time) + " rows without a timestamp skipped");
  }
  if (rec.samples.size() >= 2) {
    std::vector<double> dt(rec.samples.size() - 1);
    for (std::size_t i = 1; i < rec.samples.size(); ++i) {
      dt[i - 1] = rec.samples[i].n - rec.samples[i - 1].n;
    }
    std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2),
                     dt.end());
    const double median = dt[dt.size() / 2];
    const double nominal = 1000.0 / rec.sample_rate_hz;
    if (std::abs(median - nominal) > 0.2 * nominal) {
      report.warnings.push_back("median sample interval " + util::format_double(median) +
                                " ms differs from nominal " + util::format_double(nominal) +
                                " ms by more than 20%");
    }
  }
  return rec;
}

Recording parse_recording(const std::filesystem::path& path, const ColumnSchema& schema,
                          ParseReport& report) {
  report.path = path.string();
  auto key = key_from_filename(path.filename().string(), schema);
  if (!key) {
    throw Error(Errc::InvalidConfig,
                "file name '" + path.filename().string() + "' does not match filename_pattern");
  }
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return parse_recording(in, *key, schema, report);
}

void write_recording_csv(const Recording& rec, std::ostream& out, const ColumnSchema& schema) {
  auto has = [&](auto member) {
    return std::any_of(rec.samples.begin(), rec.samples.end(),
                       [&](const GazeSample& s) { return (s.*member).has_value(); });
  };
  const bool pos_l = has(&GazeSample::pos_l), pos_r = has(&GazeSample::pos_r);
  const bool dir_l = has(&GazeSample::dir_l), dir_r = has(&GazeSample::dir_r);

  out << schema.n << ',' << schema.x << ',' << schema.y << ',' << schema.lx << ',' << schema.ly
      << ',' << schema.rx << ',' << schema.ry;
  auto header3 = [&](bool on, const std::array<std::string, 3>& names) {
    if (on) out << ',' << names[0] << ',' << names[1] << ',' << names[2];
  };
  header3(pos_l, schema.pos_l);
  header3(pos_r, schema.pos_r);
  header3(dir_l, schema.dir_l);
  header3(dir_r, schema.dir_r);
  out << '\n';

  auto num = [](double v) { return std::isnan(v) ? std::string() : util::format_double(v); };
  auto vec3 = [&](bool on, const std::optional<Eigen::Vector3d>& v) {
    if (!on) return;
    for (int k = 0; k < 3; ++k) out << ',' << (v ? util::format_double((*v)[k]) : std::string());
  };
  for (const auto& s : rec.samples) {
    out << util::format_double(s.n) << ',' << num(s.x) << ',' << num(s.y) << ',' << num(s.lx)
        << ',' << num(s.ly) << ',' << num(s.rx) << ',' << num(s.ry);
    vec3(pos_l, s.pos_l);
    vec3(pos_r, s.pos_r);
    vec3(dir_l, s.dir_l);
    vec3(dir_r, s.dir_r);
    out << '\n';
  }
}

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::Sleepiness: return "Sleepiness";
    case Measure::NeckFatigue: return "Neck Fatigue";
    case Measure::PhysicalComfort: return "Physical Comfort";
    case Measure::MentalEffort: return "Mental Effort";
    case Measure::PhysicalEffort: return "Physical Effort";
  }
  return "?";
}

std::pair<double, double> measure_range(Measure m) {
  switch (m) {
    case Measure::Sleepiness: return {1.0, 7.0};
    case Measure::NeckFatigue: return {1.0, 5.0};
    case Measure::PhysicalComfort: return {1.0, 6.0};
    case Measure::MentalEffort: return {1.0, 5.0};
    case Measure::PhysicalEffort: return {1.0, 5.0};
  }
  return {0.0, 0.0};
}

namespace {

std::optional<bool> parse_label(std::string_view s) {
  std::string v(util::trim(s));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "yes" || v == "y" || v == "true" || v == "fatigue" || v == "fatigued") {
    return true;
  }
  if (v == "0" || v == "no" || v == "n" || v == "false" || v == "no fatigue" || v == "none") {
    return false;
  }
  return std::nullopt;
}

Gender parse_gender(std::string_view s) {
  std::string v(util::trim(s));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "f" || v == "female" || v == "woman") return Gender::Female;
  if (v == "m" || v == "male" || v == "man") return Gender::Male;
  if (v.empty()) return Gender::Unknown;
  return Gender::Other;
}

}  // namespace

std::vector<SessionMeta> load_metadata(std::istream& in, const MetadataSchema& schema,
                                       std::vector<std::string>& warnings) {
  std::vector<SessionMeta> out;
  std::string line;
  if (!std::getline(in, line) || util::trim(line).empty()) {
    warnings.push_back("metadata file is empty");
    return out;
  }
  const ColumnIndex cols = read_header(line);
  const std::size_t c_pid = cols.require(schema.participant_id);
  const auto c_sid = cols.find(schema.session_id);
  const auto c_age = cols.find(schema.age);
  const auto c_gender = cols.find(schema.gender);
  const auto c_fatigue = cols.find(schema.fatigue);
  const auto c_hours = cols.find(schema.hours_slept);
  std::array<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>, 5> c_ratings;
  for (std::size_t m = 0; m < 5; ++m) {
    c_ratings[m] = {cols.find(schema.ratings[m].first), cols.find(schema.ratings[m].second)};
  }
  if (!c_fatigue) warnings.push_back("metadata has no '" + schema.fatigue + "' column");

  auto opt_num = [](const std::vector<std::string>& row, std::optional<std::size_t> c) {
    return c ? util::parse_double(field(row, *c)) : std::nullopt;
  };

  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    auto row = util::split_csv_line(line);
    SessionMeta meta;
    meta.participant_id = std::string(util::trim(field(row, c_pid)));
    if (meta.participant_id.empty()) {
      warnings.push_back("metadata row without participant id skipped");
      continue;
    }
    if (c_sid) meta.session_id = std::string(util::trim(field(row, *c_sid)));
    meta.age = opt_num(row, c_age);
    if (c_gender) meta.gender = parse_gender(field(row, *c_gender));
    if (c_fatigue) meta.fatigue_label = parse_label(field(row, *c_fatigue));
    if (!meta.fatigue_label) {
      warnings.push_back("participant " + meta.participant_id +
                         " has no fatigue label; excluded from classification");
    }
    meta.hours_slept = opt_num(row, c_hours);
    for (std::size_t m = 0; m < 5; ++m) {
      const auto [lo, hi] = measure_range(kAllMeasures[m]);
      auto checked = [&](std::optional<double> v) -> std::optional<double> {
        if (v && (*v < lo || *v > hi)) {
          warnings.push_back("participant " + meta.participant_id + ": " +
                             std::string(to_string(kAllMeasures[m])) + " rating " +
                             util::format_double(*v) + " outside [" + util::format_double(lo) +
                             ", " + util::format_double(hi) + "] dropped");
          return std::nullopt;
        }
        return v;
      };
      meta.subjective[m].pre = checked(opt_num(row, c_ratings[m].first));
      meta.subjective[m].post = checked(opt_num(row, c_ratings[m].second));
    }
    out.push_back(std::move(meta));
  }
  if (out.empty()) warnings.push_back("metadata file has no rows");
  return out;
}

std::vector<SessionMeta> load_metadata(const std::filesystem::path& path,
                                       const MetadataSchema& schema,
                                       std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open metadata " + path.string());
  return load_metadata(in, schema, warnings);
}

SessionIndex::SessionIndex(std::vector<Recording> recordings, std::vector<SessionMeta> metas)
    : recordings_(std::move(recordings)), metas_(std::move(metas)) {
  std::map<std::string, std::vector<std::size_t>> meta_by_pid;
  for (std::size_t i = 0; i < metas_.size(); ++i) {
    meta_by_pid[metas_[i].participant_id].push_back(i);
  }
  for (std::size_t r = 0; r < recordings_.size(); ++r) {
    const auto& rec = recordings_[r];
    Entry e{r, std::nullopt};
    if (auto it = meta_by_pid.find(rec.participant_id); it != meta_by_pid.end()) {
      e.meta = it->second.front();
      for (std::size_t m : it->second) {
        if (metas_[m].session_id == rec.session_id) {
          e.meta = m;
          break;
        }
      }
    } else {
      orphans_.push_back(r);
    }
    buckets_[{rec.participant_id, rec.task}].push_back(e);
  }
}

std::vector<SessionIndex::Entry> SessionIndex::lookup(const std::string& participant_id,
                                                      Task task) const {
  auto it = buckets_.find({participant_id, task});
  if (it == buckets_.end()) return {};
  return it->second;
}

std::vector<std::string> SessionIndex::participants(Task task) const {
  std::vector<std::string> out;
  for (const auto& [key, entries] : buckets_) {
    if (key.second == task) out.push_back(key.first);
  }
  return out;
}

const SessionMeta* SessionIndex::participant_meta(const std::string& participant_id) const {
  for (const auto& m : metas_) {
    if (m.participant_id == participant_id) return &m;
  }
  return nullptr;
}

SessionIndex index_sessions(std::vector<Recording> recordings, std::vector<SessionMeta> metas) {
  return SessionIndex(std::move(recordings), std::move(metas));
}

Dataset load_dataset(const std::filesystem::path& data_dir,
                     const std::filesystem::path& metadata_path, const ColumnSchema& schema,
                     const MetadataSchema& meta_schema) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(data_dir)) {
    throw Error(Errc::Io, "data directory " + data_dir.string() + " is not readable");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(data_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    if (key_from_filename(entry.path().filename().string(), schema)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Dataset ds;
  std::vector<Recording> recs;
  std::uint64_t checksum = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    ParseReport report;
    report.path = f.string();
    try {
      checksum = util::fnv1a(util::read_file(f), checksum);
      recs.push_back(parse_recording(f, schema, report));
      ds.total_rows += report.rows;
    } catch (const Error& e) {
      report.errors.push_back(e.what());
      ++ds.failed_files;
    }
    ds.reports.push_back(std::move(report));
  }
  ds.file_count = files.size();

  std::vector<SessionMeta> metas;
  if (!metadata_path.empty()) {
    metas = load_metadata(metadata_path, meta_schema, ds.warnings);
    // labels change results, so the metadata is part of the fingerprint
    if (fs::exists(metadata_path)) checksum = util::fnv1a(util::read_file(metadata_path), checksum);
  }
  ds.checksum = checksum;
  ds.index = index_sessions(std::move(recs), std::move(metas));
  if (!ds.index.orphans().empty()) {
    ds.warnings.push_back(std::to_string(ds.index.orphans().size()) +
                          " recordings have no metadata row");
  }
  return ds;
}

}  // namespace fatigue
