// Text serialization for datasets, single networks, and trained models.
// All floating-point values are written with 17 significant digits so a
// save/load round trip is bit-exact.
#ifndef MIMOCAL_SERIALIZE_HPP
#define MIMOCAL_SERIALIZE_HPP

#include <iosfwd>
#include <string>

#include "mimocal/calinet.hpp"
#include "mimocal/channel_sim.hpp"

namespace mimocal {

// Shortest representation that parses back to the identical double.
std::string format_g17(double v);

// Dataset file:
//   # calib-dataset M=<int> N=<int> P=<int> scenario=<kind> snr_db=<real>
// followed by one "re im" line per complex entry, pair by pair, H_UL in
// column-major order then H_DL in row-major order. The noiseless marker is
// written as snr_db=inf (a token, not an arithmetic value). Every pair must
// share the header SNR; mixed-SNR sets have no file form.
void save_dataset(std::ostream& out, const CalibrationDataset& dataset);
void save_dataset(const std::string& path, const CalibrationDataset& dataset);
CalibrationDataset load_dataset(std::istream& in);
CalibrationDataset load_dataset(const std::string& path);

// Single-network block:
//   # calinet L=<int> dims=<d0,...,dL> activation_out=<tanh|linear>
// followed, per layer, by the weight matrix rows then one bias line.
void save_network(std::ostream& out, const NetworkParams& params);
void save_network(const std::string& path, const NetworkParams& params);
NetworkParams load_network(std::istream& in);
NetworkParams load_network(const std::string& path);

// Model file: one
//   # calinet-model mode=<per_user|joint> M=<int> N=<int> nets=<int> target_scale=<real>
// line followed by `nets` single-network blocks.
void save_model(std::ostream& out, const CalibrationModel& model);
void save_model(const std::string& path, const CalibrationModel& model);
CalibrationModel load_model(std::istream& in);
CalibrationModel load_model(const std::string& path);

}  // namespace mimocal

#endif  // MIMOCAL_SERIALIZE_HPP
