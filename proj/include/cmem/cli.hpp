#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace cmem {

/// Resolved command line. Unset optionals fall back to the config file, then to defaults.
struct RunConfig {
    std::string command;  ///< simulate | fit | diagnose | forecast-eval | simstudy
    std::string input_path;
    std::string config_path;
    std::string output_path;  ///< empty: standard output
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> holdout_length;
    std::optional<std::string> method;
    std::optional<std::string> op;
    std::optional<std::string> order;
    std::optional<double> nq_r;
    std::optional<std::size_t> replications;
    std::optional<double> trim;
    std::optional<unsigned> threads;
    std::size_t n = 1000;        ///< simulate length
    std::size_t burn_in = 500;   ///< simulate burn-in
    bool with_means = false;     ///< simulate: add the latent mean column
    std::string format = "csv";  ///< simstudy: csv | text
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr std::uint64_t kDefaultSeed = 1;

/// Executes one command. Errors are written to err as a JSON record.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to run.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cmem
