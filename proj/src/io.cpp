#include "mgfn/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mgfn::io {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("missing artifact: " + file.string());
  return in;
}

json read_json(const fs::path& file) {
  auto in = open_in(file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad JSON in " + file.string() + ": " + e.what());
  }
  return j;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double to_double(const std::string& s, const fs::path& file, long line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file.string() + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

long to_long(const std::string& s, const fs::path& file, long line_no) {
  const double v = to_double(s, file, line_no);
  const long l = static_cast<long>(v);
  if (static_cast<double>(l) != v)
    throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected integer '" + s + "'");
  return l;
}

void expect_header(std::ifstream& in, const fs::path& file, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected)
    throw ParseError(file.string() + ": expected header '" + expected + "', got '" + line + "'");
}

fs::path bin_file(const fs::path& dir, Index t) {
  char name[32];
  std::snprintf(name, sizeof(name), "bin_%05" PRIdMAX ".csv", static_cast<std::intmax_t>(t));
  return dir / name;
}

void save_edge_list(const fs::path& file, Index tag, const Matrix& w) {
  auto out = open_out(file);
  out << "t,origin,destination,weight\n";
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j)
      if (w(i, j) != 0.0)
        out << tag << ',' << i << ',' << j << ',' << format_double(w(i, j)) << '\n';
}

Matrix load_edge_list(const fs::path& file, Index n_regions, Index expected_tag) {
  auto in = open_in(file);
  expect_header(in, file, "t,origin,destination,weight");
  Matrix w = Matrix::Zero(n_regions, n_regions);
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    const long tag = to_long(fields[0], file, line_no);
    const long i = to_long(fields[1], file, line_no);
    const long j = to_long(fields[2], file, line_no);
    if (tag != expected_tag)
      throw ValidationError(file.string() + ": unexpected time index " + std::to_string(tag));
    if (i < 0 || i >= n_regions || j < 0 || j >= n_regions)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": region id out of range");
    w(i, j) = to_double(fields[3], file, line_no);
  }
  return w;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_regions(const fs::path& file, const RegionSet& regions) {
  auto out = open_out(file);
  out << "id,label\n";
  for (Index i = 0; i < regions.count; ++i) {
    const std::string label =
        regions.labels ? (*regions.labels)[static_cast<std::size_t>(i)] : "region_" + std::to_string(i);
    out << i << ',' << label << '\n';
  }
}

RegionSet load_regions(const fs::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "id,label");
  RegionSet regions;
  std::vector<std::string> labels;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    if (to_long(fields[0], file, line_no) != static_cast<long>(labels.size()))
      throw ValidationError(file.string() + ": region ids must be dense and ordered");
    labels.push_back(fields[1]);
  }
  regions.count = static_cast<Index>(labels.size());
  regions.labels = std::move(labels);
  regions.validate();
  return regions;
}

void save_multigraph(const fs::path& dir, const MobilityMultiGraph& mg,
                     std::optional<TimeWindow> window) {
  mg.validate();
  fs::create_directories(dir);
  json manifest;
  manifest["n_regions"] = mg.regions.count;
  manifest["t_bins"] = mg.size();
  manifest["bin_width_s"] = mg.bin_width_s;
  manifest["period_s"] = mg.period_s;
  manifest["bin_start_s"] = mg.graphs.front().bin_start;
  if (window) manifest["window"] = {{"start_s", window->start}, {"end_s", window->end}};
  if (mg.regions.labels) manifest["labels"] = *mg.regions.labels;
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
  for (const auto& g : mg.graphs) save_edge_list(bin_file(dir, g.time_index), g.time_index, g.weights);
}

MobilityMultiGraph load_multigraph(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  MobilityMultiGraph mg;
  mg.regions.count = manifest.at("n_regions").get<Index>();
  if (manifest.contains("labels"))
    mg.regions.labels = manifest.at("labels").get<std::vector<std::string>>();
  mg.bin_width_s = manifest.at("bin_width_s").get<std::int64_t>();
  mg.period_s = manifest.at("period_s").get<std::int64_t>();
  const Index t_bins = manifest.at("t_bins").get<Index>();
  const std::int64_t start = manifest.at("bin_start_s").get<std::int64_t>();
  mg.graphs.reserve(static_cast<std::size_t>(t_bins));
  for (Index t = 0; t < t_bins; ++t) {
    MobilityGraph g;
    g.time_index = t;
    g.bin_start = start + t * mg.bin_width_s;
    g.weights = load_edge_list(bin_file(dir, t), mg.regions.count, t);
    mg.graphs.push_back(std::move(g));
  }
  mg.validate();
  return mg;
}

void save_matrix_csv(const fs::path& file, const Matrix& m) {
  auto out = open_out(file);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix load_matrix_csv(const fs::path& file) {
  auto in = open_in(file);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(to_double(f, file, line_no));
    if (!rows.empty() && rows.front().size() != row.size())
      throw ParseError(file.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(file.string() + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void save_distances(const fs::path& values_file, const fs::path& components_file,
                    const DistanceMatrix& d) {
  save_matrix_csv(values_file, d.values);
  auto out = open_out(components_file);
  out << "a,b,d_mean,d_var,d_unif,d_ss,mgd\n";
  for (Index a = 0; a < d.values.rows(); ++a)
    for (Index b = a + 1; b < d.values.cols(); ++b) {
      const DistanceComponents c = d.pair(a, b);
      out << a << ',' << b << ',' << format_double(c.d_mean) << ',' << format_double(c.d_var)
          << ',' << format_double(c.d_unif) << ',' << c.d_ss << ','
          << format_double(d.values(a, b)) << '\n';
    }
}

void save_assignment(const fs::path& file, const ClusterAssignment& asg,
                     const MobilityMultiGraph& mg) {
  if (static_cast<Index>(asg.labels.size()) != mg.size())
    throw ValidationError("assignment length does not match the multigraph");
  auto out = open_out(file);
  out << "time_index,bin_start,cluster\n";
  for (Index t = 0; t < mg.size(); ++t)
    out << t << ',' << mg.graphs[static_cast<std::size_t>(t)].bin_start << ','
        << asg.labels[static_cast<std::size_t>(t)] << '\n';
}

ClusterAssignment load_assignment(const fs::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "time_index,bin_start,cluster");
  ClusterAssignment asg;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    const long t = to_long(fields[0], file, line_no);
    if (t != static_cast<long>(asg.labels.size()))
      throw ValidationError(file.string() + ": time indices must be dense and ordered");
    const long cluster = to_long(fields[2], file, line_no);
    asg.labels.push_back(static_cast<Index>(cluster));
    asg.n_clusters = std::max(asg.n_clusters, static_cast<Index>(cluster) + 1);
  }
  return asg;
}

void save_patterns(const fs::path& dir, const std::vector<MobilityPattern>& patterns,
                   Index n_regions) {
  fs::create_directories(dir);
  json manifest;
  manifest["n_regions"] = n_regions;
  manifest["n_patterns"] = patterns.size();
  json members = json::array();
  for (const auto& p : patterns) members.push_back(p.members);
  manifest["members"] = members;
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
  for (const auto& p : patterns) {
    char name[32];
    std::snprintf(name, sizeof(name), "pattern_%03" PRIdMAX ".csv",
                  static_cast<std::intmax_t>(p.pattern_id));
    save_edge_list(dir / name, p.pattern_id, p.weights);
  }
}

std::vector<MobilityPattern> load_patterns(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  const Index n_regions = manifest.at("n_regions").get<Index>();
  const Index n_patterns = manifest.at("n_patterns").get<Index>();
  std::vector<MobilityPattern> patterns;
  patterns.reserve(static_cast<std::size_t>(n_patterns));
  for (Index k = 0; k < n_patterns; ++k) {
    MobilityPattern p;
    p.pattern_id = k;
    p.members = manifest.at("members").at(static_cast<std::size_t>(k)).get<std::vector<Index>>();
    char name[32];
    std::snprintf(name, sizeof(name), "pattern_%03" PRIdMAX ".csv", static_cast<std::intmax_t>(k));
    p.weights = load_edge_list(dir / name, n_regions, k);
    patterns.push_back(std::move(p));
  }
  return patterns;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) throw ParseError("empty tensor in checkpoint");
  const Index cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw ParseError("ragged tensor in checkpoint");
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = row.at(static_cast<std::size_t>(jj)).get<double>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const fs::path& file, const Checkpoint& ckpt) {
  json j;
  j["dims"] = {{"n_regions", ckpt.dims.n_regions}, {"n_patterns", ckpt.dims.n_patterns},
               {"hidden", ckpt.dims.hidden},       {"heads", ckpt.dims.heads},
               {"layers", ckpt.dims.layers}};
  j["seed"] = ckpt.seed;
  j["ablation"] = {{"no_mgf", ckpt.ablation.no_mgf},
                   {"no_ipmp", ckpt.ablation.no_ipmp},
                   {"no_ipmca", ckpt.ablation.no_ipmca}};
  json tensors;
  for_each_tensor(ckpt.params, [&tensors](const std::string& name, const Matrix& m) {
    tensors[name] = matrix_to_json(m);
  });
  j["tensors"] = std::move(tensors);
  open_out(file) << j.dump() << '\n';
}

Checkpoint load_checkpoint(const fs::path& file) {
  const json j = read_json(file);
  Checkpoint ckpt;
  const auto& dims = j.at("dims");
  ckpt.dims.n_regions = dims.at("n_regions").get<Index>();
  ckpt.dims.n_patterns = dims.at("n_patterns").get<Index>();
  ckpt.dims.hidden = dims.at("hidden").get<Index>();
  ckpt.dims.heads = dims.at("heads").get<Index>();
  ckpt.dims.layers = dims.at("layers").get<Index>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  const auto& ablation = j.at("ablation");
  ckpt.ablation.no_mgf = ablation.at("no_mgf").get<bool>();
  ckpt.ablation.no_ipmp = ablation.at("no_ipmp").get<bool>();
  ckpt.ablation.no_ipmca = ablation.at("no_ipmca").get<bool>();
  ckpt.params = init_params(ckpt.dims, 0);  // allocate the right shapes
  const auto& tensors = j.at("tensors");
  for_each_tensor(ckpt.params, [&tensors, &file](const std::string& name, Matrix& m) {
    if (!tensors.contains(name)) throw ParseError(file.string() + ": checkpoint misses " + name);
    Matrix loaded = matrix_from_json(tensors.at(name));
    if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
      throw ValidationError(file.string() + ": tensor shape mismatch for " + name);
    m = std::move(loaded);
  });
  return ckpt;
}

void save_embeddings(const fs::path& file, const RegionEmbedding& emb) {
  auto out = open_out(file);
  out << "region_id";
  for (Index j = 0; j < emb.values.cols(); ++j) out << ",e" << j;
  out << '\n';
  for (Index i = 0; i < emb.values.rows(); ++i) {
    out << i;
    for (Index j = 0; j < emb.values.cols(); ++j) out << ',' << format_double(emb.values(i, j));
    out << '\n';
  }
}

RegionEmbedding load_embeddings(const fs::path& file) {
  auto in = open_in(file);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(file.string() + ": empty file");
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected id + values");
    if (to_long(fields[0], file, line_no) != static_cast<long>(rows.size()))
      throw ValidationError(file.string() + ": region ids must be dense and ordered");
    std::vector<double> row;
    for (std::size_t f = 1; f < fields.size(); ++f) row.push_back(to_double(fields[f], file, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(file.string() + ": no embeddings");
  RegionEmbedding emb;
  emb.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < emb.values.rows(); ++i)
    for (Index j = 0; j < emb.values.cols(); ++j)
      emb.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return emb;
}

void save_history(const fs::path& file, const TrainHistory& history) {
  auto out = open_out(file);
  out << "epoch,loss,seconds\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e << ',' << format_double(history[e].loss) << ',' << format_double(history[e].seconds)
        << '\n';
}

void save_ground_truth(const fs::path& file, const GroundTruth& truth) {
  json j;
  json regimes = json::array();
  for (const Regime r : truth.regime_labels) regimes.push_back(regime_name(r));
  j["regime_labels"] = std::move(regimes);
  json functions = json::array();
  for (const RegionFunction f : truth.region_function)
    functions.push_back(f == RegionFunction::Residential ? "residential" : "office");
  j["region_function"] = std::move(functions);
  json intensity = json::array();
  for (Index i = 0; i < truth.activity_intensity.size(); ++i)
    intensity.push_back(truth.activity_intensity(i));
  j["activity_intensity"] = std::move(intensity);
  open_out(file) << j.dump(2) << '\n';
}

GroundTruth load_ground_truth(const fs::path& file) {
  const json j = read_json(file);
  GroundTruth truth;
  for (const auto& name : j.at("regime_labels")) {
    const std::string s = name.get<std::string>();
    if (s == "weekday_am") truth.regime_labels.push_back(Regime::WeekdayAm);
    else if (s == "weekday_pm") truth.regime_labels.push_back(Regime::WeekdayPm);
    else if (s == "weekday_off") truth.regime_labels.push_back(Regime::WeekdayOff);
    else if (s == "weekend_day") truth.regime_labels.push_back(Regime::WeekendDay);
    else if (s == "weekend_night") truth.regime_labels.push_back(Regime::WeekendNight);
    else throw ParseError(file.string() + ": unknown regime '" + s + "'");
  }
  for (const auto& name : j.at("region_function")) {
    const std::string s = name.get<std::string>();
    if (s == "residential") truth.region_function.push_back(RegionFunction::Residential);
    else if (s == "office") truth.region_function.push_back(RegionFunction::Office);
    else throw ParseError(file.string() + ": unknown region function '" + s + "'");
  }
  const auto& intensity = j.at("activity_intensity");
  truth.activity_intensity.resize(static_cast<Index>(intensity.size()));
  for (Index i = 0; i < truth.activity_intensity.size(); ++i)
    truth.activity_intensity(i) = intensity.at(static_cast<std::size_t>(i)).get<double>();
  return truth;
}

void save_regression_targets(const fs::path& file, const Vector& values) {
  auto out = open_out(file);
  out << "region_id,value\n";
  for (Index i = 0; i < values.size(); ++i)
    out << i << ',' << format_double(values(i)) << '\n';
}

Vector load_regression_targets(const fs::path& file, Index n_regions) {
  auto in = open_in(file);
  expect_header(in, file, "region_id,value");
  Vector values = Vector::Zero(n_regions);
  std::vector<bool> seen(static_cast<std::size_t>(n_regions), false);
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    const long id = to_long(fields[0], file, line_no);
    if (id < 0 || id >= n_regions)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": region id out of range");
    values(id) = to_double(fields[1], file, line_no);
    seen[static_cast<std::size_t>(id)] = true;
  }
  for (Index i = 0; i < n_regions; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw ValidationError(file.string() + ": missing target for region " + std::to_string(i));
  return values;
}

void save_clustering_targets(const fs::path& file, const std::vector<Index>& labels) {
  auto out = open_out(file);
  out << "region_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

std::vector<Index> load_clustering_targets(const fs::path& file, Index n_regions) {
  auto in = open_in(file);
  expect_header(in, file, "region_id,label");
  std::vector<Index> labels(static_cast<std::size_t>(n_regions), -1);
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    const long id = to_long(fields[0], file, line_no);
    if (id < 0 || id >= n_regions)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": region id out of range");
    labels[static_cast<std::size_t>(id)] = static_cast<Index>(to_long(fields[1], file, line_no));
  }
  for (Index i = 0; i < n_regions; ++i)
    if (labels[static_cast<std::size_t>(i)] < 0)
      throw ValidationError(file.string() + ": missing label for region " + std::to_string(i));
  return labels;
}

void save_report_json(const fs::path& file, const std::optional<RegressionReport>& regression,
                      const std::optional<ClusteringReport>& clustering) {
  json j;
  if (regression)
    j["regression"] = {{"mae", regression->mae},
                       {"rmse", regression->rmse},
                       {"r2", regression->r2},
                       {"folds", regression->fold_count}};
  if (clustering)
    j["clustering"] = {{"nmi", clustering->nmi}, {"ari", clustering->ari}, {"k", clustering->k}};
  open_out(file) << j.dump(2) << '\n';
}

void save_report_row(const fs::path& file, const std::optional<RegressionReport>& regression,
                     const std::optional<ClusteringReport>& clustering) {
  auto out = open_out(file);
  out << "mae,rmse,r2,nmi,ari\n";
  const auto cell = [&out](bool present, double v) {
    if (present) out << format_double(v);
  };
  cell(regression.has_value(), regression ? regression->mae : 0.0);
  out << ',';
  cell(regression.has_value(), regression ? regression->rmse : 0.0);
  out << ',';
  cell(regression.has_value(), regression ? regression->r2 : 0.0);
  out << ',';
  cell(clustering.has_value(), clustering ? clustering->nmi : 0.0);
  out << ',';
  cell(clustering.has_value(), clustering ? clustering->ari : 0.0);
  out << '\n';
}

}  // namespace mgfn::io
