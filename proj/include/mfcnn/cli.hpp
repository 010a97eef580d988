#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mfcnn::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kNumeric = 3;

// args excludes the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double x);

// Flat key=value file; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Appends --key=value for every config entry whose flag is absent from args,
// so explicit flags win over the file.
std::vector<std::string> merge_config(const std::vector<std::string>& args,
                                      const std::map<std::string, std::string>& config);

}  // namespace mfcnn::cli
