#include "krope/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace krope {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_matrix_csv(const Mat& m, const std::string& path) {
  std::ofstream f = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) f << ',';
      f << format_double(m(i, j));
    }
    f << '\n';
  }
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged matrix CSV: " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat m(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

void write_mdp_json(const TabularMDP& mdp, const std::string& path) {
  json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  j["r_min"] = mdp.r_min;
  j["r_max"] = mdp.r_max;
  j["rewards"] = std::vector<double>(mdp.rewards.data(),
                                     mdp.rewards.data() + mdp.rewards.size());
  j["d0"] = std::vector<double>(mdp.d0.data(), mdp.d0.data() + mdp.d0.size());
  std::vector<int> term;
  for (bool b : mdp.terminal) term.push_back(b ? 1 : 0);
  j["terminal"] = term;
  std::vector<std::vector<double>> trans;
  for (Eigen::Index i = 0; i < mdp.transitions.rows(); ++i) {
    std::vector<double> row(mdp.transitions.cols());
    for (Eigen::Index c = 0; c < mdp.transitions.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = mdp.transitions(i, c);
    }
    trans.push_back(std::move(row));
  }
  j["transitions"] = trans;
  if (mdp.seed.has_value()) {
    j["seed"] = *mdp.seed;
  } else {
    j["seed"] = nullptr;
  }
  open_out(path) << j.dump(2) << '\n';
}

TabularMDP read_mdp_json(const std::string& path) {
  json j;
  open_in(path) >> j;
  TabularMDP mdp;
  mdp.n_states = j.at("n_states").get<int>();
  mdp.n_actions = j.at("n_actions").get<int>();
  mdp.gamma = j.at("gamma").get<double>();
  mdp.r_min = j.at("r_min").get<double>();
  mdp.r_max = j.at("r_max").get<double>();
  const auto rewards = j.at("rewards").get<std::vector<double>>();
  mdp.rewards = Eigen::Map<const Vec>(rewards.data(),
                                      static_cast<Eigen::Index>(rewards.size()));
  const auto d0 = j.at("d0").get<std::vector<double>>();
  mdp.d0 = Eigen::Map<const Vec>(d0.data(), static_cast<Eigen::Index>(d0.size()));
  for (int t : j.at("terminal").get<std::vector<int>>()) {
    mdp.terminal.push_back(t != 0);
  }
  const auto trans = j.at("transitions").get<std::vector<std::vector<double>>>();
  mdp.transitions.resize(static_cast<Eigen::Index>(trans.size()),
                         mdp.n_states);
  for (std::size_t i = 0; i < trans.size(); ++i) {
    if (static_cast<int>(trans[i].size()) != mdp.n_states) {
      throw std::runtime_error("transition row size mismatch: " + path);
    }
    for (int c = 0; c < mdp.n_states; ++c) {
      mdp.transitions(static_cast<Eigen::Index>(i), c) = trans[i][c];
    }
  }
  if (j.contains("seed") && !j.at("seed").is_null()) {
    mdp.seed = j.at("seed").get<std::uint64_t>();
  }
  mdp.validate();
  return mdp;
}

void write_dataset_json(const OfflineDataset& ds, const std::string& path) {
  json j;
  std::vector<json> tuples;
  tuples.reserve(ds.transitions.size());
  for (const Transition& t : ds.transitions) {
    tuples.push_back({{"s", t.s}, {"a", t.a}, {"r", t.r}, {"s_next", t.s_next}});
  }
  j["transitions"] = tuples;
  j["mu"] = std::vector<double>(ds.mu.data(), ds.mu.data() + ds.mu.size());
  open_out(path) << j.dump(2) << '\n';
}

OfflineDataset read_dataset_json(const std::string& path) {
  json j;
  open_in(path) >> j;
  OfflineDataset ds;
  for (const json& t : j.at("transitions")) {
    ds.transitions.push_back({t.at("s").get<int>(), t.at("a").get<int>(),
                              t.at("r").get<double>(),
                              t.at("s_next").get<int>()});
  }
  const auto mu = j.at("mu").get<std::vector<double>>();
  ds.mu = Eigen::Map<const Vec>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  return ds;
}

void write_dataset_csv(const OfflineDataset& ds, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "s,a,r,s_next\n";
  for (const Transition& t : ds.transitions) {
    f << t.s << ',' << t.a << ',' << format_double(t.r) << ',' << t.s_next
      << '\n';
  }
}

void write_training_trace_csv(const std::vector<EpochRecord>& trace,
                              const std::string& path) {
  std::ofstream f = open_out(path);
  f << "epoch,loss,aux_loss,param_norm,status\n";
  for (const EpochRecord& r : trace) {
    f << r.epoch << ',' << format_double(r.loss) << ','
      << format_double(r.aux_loss) << ',' << format_double(r.param_norm) << ','
      << (r.status == TrainStatus::Ok ? "ok" : "diverged") << '\n';
  }
}

void write_lspe_trace_csv(const std::vector<LspeIterRecord>& trace,
                          const std::string& path) {
  std::ofstream f = open_out(path);
  f << "iter,theta_norm,delta_norm\n";
  for (const LspeIterRecord& r : trace) {
    f << r.iter << ',' << format_double(r.theta_norm) << ','
      << format_double(r.delta_norm) << '\n';
  }
}

}  // namespace krope
