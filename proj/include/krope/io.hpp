#pragma once

#include "krope/encoder.hpp"
#include "krope/lspe.hpp"
#include "krope/mdp.hpp"

#include <string>
#include <vector>

namespace krope {

// Row-major, headerless, 17-significant-digit decimal.
void write_matrix_csv(const Mat& m, const std::string& path);
Mat read_matrix_csv(const std::string& path);

// JSON round trips. Seeds and terminal flags are explicit fields.
void write_mdp_json(const TabularMDP& mdp, const std::string& path);
TabularMDP read_mdp_json(const std::string& path);
void write_dataset_json(const OfflineDataset& ds, const std::string& path);
OfflineDataset read_dataset_json(const std::string& path);

// Header `s,a,r,s_next`.
void write_dataset_csv(const OfflineDataset& ds, const std::string& path);

// Header `epoch,loss,aux_loss,param_norm,status`.
void write_training_trace_csv(const std::vector<EpochRecord>& trace,
                              const std::string& path);

// Header `iter,theta_norm,delta_norm`.
void write_lspe_trace_csv(const std::vector<LspeIterRecord>& trace,
                          const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace krope
