#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "anisofeat/shapes.hpp"

namespace anisofeat {

// Dataset directory layout: meta.json plus one binary file per sample,
// named <split>_<index>.bin in split order.
inline void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta;
    meta["seed"] = ds.seed;
    meta["n"] = ds.config.n;
    meta["counts"] = {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
    meta["grid"] = ds.config.grid;
    meta["spacing_mm"] = ds.config.spacing_mm;
    meta["anisotropy_factor"] = ds.config.anisotropy_factor;
    meta["anisotropy_axis"] = ds.config.anisotropy_axis;
    meta["split"] = ds.config.split;
    meta["feret_directions"] = ds.config.feret_directions;
    meta["blob_smoothness"] = ds.config.blob_smoothness;
    std::ofstream mf(fs::path(dir) / "meta.json");
    if (!mf) throw std::runtime_error("save_dataset: cannot write meta.json in " + dir);
    mf << meta.dump(2) << "\n";

    char name[64];
    auto dump_split = [&](const std::vector<ShapeSample>& split, const char* tag) {
        for (std::size_t i = 0; i < split.size(); ++i) {
            std::snprintf(name, sizeof(name), "%s_%05zu.bin", tag, i);
            save_sample(split[i], (fs::path(dir) / name).string());
        }
    };
    dump_split(ds.train, "train");
    dump_split(ds.val, "val");
    dump_split(ds.test, "test");
}

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "meta.json");
    if (!mf) throw std::runtime_error("load_dataset: cannot open meta.json in " + dir);
    nlohmann::json meta = nlohmann::json::parse(mf);

    Dataset ds;
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.config.n = meta.at("n").get<int>();
    ds.config.grid = meta.at("grid").get<std::array<int, 3>>();
    ds.config.spacing_mm = meta.at("spacing_mm").get<double>();
    ds.config.anisotropy_factor = meta.at("anisotropy_factor").get<int>();
    ds.config.anisotropy_axis = meta.at("anisotropy_axis").get<int>();
    ds.config.split = meta.at("split").get<std::array<double, 3>>();
    ds.config.feret_directions = meta.at("feret_directions").get<int>();
    ds.config.blob_smoothness = meta.at("blob_smoothness").get<double>();

    char name[64];
    auto read_split = [&](std::vector<ShapeSample>& split, const char* tag, std::size_t count) {
        split.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::snprintf(name, sizeof(name), "%s_%05zu.bin", tag, i);
            split.push_back(load_sample((fs::path(dir) / name).string()));
        }
    };
    read_split(ds.train, "train", meta.at("counts").at("train").get<std::size_t>());
    read_split(ds.val, "val", meta.at("counts").at("val").get<std::size_t>());
    read_split(ds.test, "test", meta.at("counts").at("test").get<std::size_t>());
    return ds;
}

}  // namespace anisofeat
