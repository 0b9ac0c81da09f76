#ifndef FRACSHAPE_IO_HPP
#define FRACSHAPE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracshape/concentration.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/shape.hpp"
#include "fracshape/solvers.hpp"

namespace fracshape {

using Json = nlohmann::ordered_json;

/// Fixed 17-significant-digit rendering used by every CSV writer.
std::string format_real(double x);

/// Finite values as numbers; +-infinity as the strings "+infinity"/"-infinity".
Json real_to_json(double x);
double real_from_json(const Json& j);

/// "0*5,1*3" style run-length encoding of a bitstring.
std::string encode_rle(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> decode_rle(const std::string& text, std::size_t expected_size);

Json grid_to_json(const Grid& g);
Grid grid_from_json(const Json& j);
Json mask_to_json(const DomainMask& m);
DomainMask mask_from_json(const Json& j);

Json spectrum_to_json(const Spectrum& sp);
Json torsion_to_json(const TorsionFunction& t);
Json trichotomy_to_json(const TrichotomyReport& r);
Json dichotomy_to_json(const DichotomyReport& r);
Json lieb_to_json(const LiebResult& r);

/// "cell_index,value" rows with a header, LF endings.
std::string function_csv(const GridFunction& f);
/// Header d,lambda1_union,lambda2_union,lambda1_half_ball,gap.
std::string two_ball_csv(const std::vector<TwoBallRow>& rows);
/// One JSON object per checkpoint: index, value, volume, run-length cells.
std::string trajectory_jsonl(const ShapeTrajectory& traj);

std::string sha256_hex(const std::string& bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fracshape

#endif
