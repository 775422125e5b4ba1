/*
   Copyright 2026 The hidacur Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// hidacur <kind> --config <path> [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 nonexistence of the requested object.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hidacur/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNonexistence = 4;

int report(const std::string& kind, const char* type, const std::string& message, int code)
{
    const nlohmann::json err = {{"kind", kind}, {"status", "error"}, {"error_type", type}, {"message", message},
                                {"version", HIDACUR_VERSION}};
    std::cout << err.dump(2) << '\n';
    std::cerr << "hidacur: " << type << ": " << message << '\n';
    return code;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw hidacur::ConfigError("cannot write " + path.string());
    }
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical experiments on the Hida-distribution current"};
    std::string kind, config, out_dir;
    std::uint64_t seed = 0;
    app.add_option("kind", kind, "experiment kind")->required()->check(CLI::IsMember(hidacur::experiment_kinds()));
    app.add_option("--config", config, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "directory for result JSON and CSV plot data");
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    hidacur::RunOptions opts;
    if (seed_opt->count() > 0) {
        opts.seed = seed;
    }
    try {
        const auto cfg = hidacur::load_config(config);
        const auto out = hidacur::run_experiment(kind, cfg, opts);
        if (!out_dir.empty()) {
            const std::filesystem::path dir(out_dir);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec) {
                throw hidacur::ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
            }
            write_file(dir / (kind + "_result.json"), out.result.dump(2) + '\n');
            for (const auto& [name, text] : out.csv) {
                write_file(dir / name, text);
            }
        }
        std::cout << out.result.dump(2) << '\n';
        return 0;
    } catch (const hidacur::ConfigError& e) {
        return report(kind, "ConfigError", e.what(), kExitConfig);
    } catch (const hidacur::NonexistenceError& e) {
        return report(kind, "NonexistenceError", e.what(), kExitNonexistence);
    } catch (const hidacur::DomainError& e) {
        return report(kind, "DomainError", e.what(), kExitConfig);
    } catch (const hidacur::UnsupportedParameter& e) {
        return report(kind, "UnsupportedParameter", e.what(), kExitConfig);
    } catch (const hidacur::Error& e) {
        return report(kind, "NumericalFailure", e.what(), kExitNumeric);
    } catch (const std::exception& e) {
        return report(kind, "InternalError", e.what(), kExitNumeric);
    }
}
