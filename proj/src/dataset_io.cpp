#include "annofuse/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace annofuse {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw InputError(msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, bool strict,
                const std::string& where) {
    if (!strict) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            fail(where + ": unknown key \"" + it.key() + "\" (strict mode)");
    }
}

double require_number(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where + ": missing \"" + std::string(key) + "\"");
    if (!it->is_number()) fail(where + ": \"" + std::string(key) + "\" must be a number");
    return it->get<double>();
}

PointAnnotation parse_point(const json& j, const std::string& image_id, const SourceId& source,
                            std::size_t index, bool strict, bool allow_confidence) {
    const std::string where = "image \"" + image_id + "\", " +
                              (source.empty() ? std::string("reference")
                                              : "source \"" + source + "\"") +
                              ", annotation " + std::to_string(index);
    if (!j.is_object()) fail(where + ": annotation must be an object");
    check_keys(j, allow_confidence ? std::set<std::string>{"u", "v", "confidence"}
                                   : std::set<std::string>{"u", "v"},
               strict, where);

    PointAnnotation p;
    p.image_id = image_id;
    p.source = source;
    p.u = require_number(j, "u", where);
    p.v = require_number(j, "v", where);
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) fail(where + ": coordinates must be finite");

    if (allow_confidence) {
        auto it = j.find("confidence");
        if (it != j.end() && !it->is_null()) {
            if (!it->is_number()) fail(where + ": \"confidence\" must be a number or null");
            const double c = it->get<double>();
            if (!(c >= 0.0 && c <= 1.0)) fail(where + ": confidence out of [0,1]");
            p.confidence = c;
        }
    }
    return p;
}

void check_points(const std::vector<PointAnnotation>& pts, int width, int height,
                  const std::string& image_id, const std::string& set_name) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const std::string where = "image \"" + image_id + "\", " + set_name + ", annotation " +
                                  std::to_string(i);
        if (!(p.u >= 0.0 && p.u < width && p.v >= 0.0 && p.v < height))
            fail(where + ": out of bounds (u=" + std::to_string(p.u) +
                 ", v=" + std::to_string(p.v) + ", image " + std::to_string(width) + "x" +
                 std::to_string(height) + ")");
        for (std::size_t k = 0; k < i; ++k) {
            if (pts[k].u == p.u && pts[k].v == p.v)
                fail(where + ": duplicate coordinates with annotation " + std::to_string(k));
        }
    }
}

json point_to_json(const PointAnnotation& p, bool with_confidence) {
    json j;
    j["u"] = p.u;
    j["v"] = p.v;
    if (with_confidence) j["confidence"] = p.confidence ? json(*p.confidence) : json(nullptr);
    return j;
}

}  // namespace

void validate_dataset(const Dataset& d) {
    std::set<SourceId> seen_sources;
    for (const auto& s : d.sources) {
        if (s.empty()) fail("source names must be non-empty");
        if (!seen_sources.insert(s).second) fail("duplicate source \"" + s + "\"");
    }
    std::set<std::string> seen_ids;
    for (const auto& img : d.images) {
        if (img.id.empty()) fail("image ids must be non-empty");
        if (!seen_ids.insert(img.id).second) fail("duplicate image id \"" + img.id + "\"");
        if (img.width <= 0 || img.height <= 0)
            fail("image \"" + img.id + "\": width/height must be positive");
        if (img.annotations.size() != d.sources.size())
            fail("image \"" + img.id + "\": annotation sets not aligned with sources");
        for (std::size_t k = 0; k < d.sources.size(); ++k) {
            const auto& set = img.annotations[k];
            if (set.source != d.sources[k] || set.image_id != img.id)
                fail("image \"" + img.id + "\": annotation set " + std::to_string(k) +
                     " has inconsistent ids");
            check_points(set.annotations, img.width, img.height, img.id,
                         "source \"" + set.source + "\"");
        }
        if (img.reference)
            check_points(*img.reference, img.width, img.height, img.id, "reference");
    }
}

Dataset dataset_from_json(const json& j, bool strict) {
    if (!j.is_object()) fail("dataset: top level must be an object");
    check_keys(j, {"sources", "images", "metadata"}, strict, "dataset");

    Dataset d;
    auto sit = j.find("sources");
    if (sit == j.end() || !sit->is_array()) fail("dataset: \"sources\" must be an array");
    for (const auto& s : *sit) {
        if (!s.is_string()) fail("dataset: source names must be strings");
        d.sources.push_back(s.get<std::string>());
    }

    auto iit = j.find("images");
    if (iit == j.end() || !iit->is_array()) fail("dataset: \"images\" must be an array");
    for (const auto& ji : *iit) {
        if (!ji.is_object()) fail("dataset: image entries must be objects");
        ImageRecord img;
        {
            auto idit = ji.find("id");
            if (idit == ji.end() || !idit->is_string()) fail("image entry: missing string \"id\"");
            img.id = idit->get<std::string>();
        }
        const std::string where = "image \"" + img.id + "\"";
        check_keys(ji, {"id", "width", "height", "raster", "annotations", "reference"}, strict,
                   where);

        const double w = require_number(ji, "width", where);
        const double h = require_number(ji, "height", where);
        if (w != std::floor(w) || h != std::floor(h))
            fail(where + ": width/height must be integers");
        img.width = static_cast<int>(w);
        img.height = static_cast<int>(h);

        if (auto rit = ji.find("raster"); rit != ji.end() && !rit->is_null()) {
            if (!rit->is_string()) fail(where + ": \"raster\" must be a string");
            img.raster = rit->get<std::string>();
        }

        img.annotations.reserve(d.sources.size());
        for (const auto& s : d.sources)
            img.annotations.push_back(AnnotationSet{img.id, s, {}});

        if (auto ait = ji.find("annotations"); ait != ji.end()) {
            if (!ait->is_object()) fail(where + ": \"annotations\" must be an object");
            for (auto it = ait->begin(); it != ait->end(); ++it) {
                auto idx = d.source_index(it.key());
                if (!idx) fail(where + ": unknown source id \"" + it.key() + "\"");
                if (!it->is_array()) fail(where + ": annotation lists must be arrays");
                auto& set = img.annotations[*idx];
                std::size_t n = 0;
                for (const auto& jp : *it)
                    set.annotations.push_back(parse_point(jp, img.id, it.key(), n++, strict, true));
            }
        }

        if (auto refit = ji.find("reference"); refit != ji.end() && !refit->is_null()) {
            if (!refit->is_array()) fail(where + ": \"reference\" must be an array");
            std::vector<PointAnnotation> ref;
            std::size_t n = 0;
            for (const auto& jp : *refit)
                ref.push_back(parse_point(jp, img.id, "", n++, strict, false));
            img.reference = std::move(ref);
        }

        d.images.push_back(std::move(img));
    }

    if (auto mit = j.find("metadata"); mit != j.end() && !mit->is_null()) d.metadata = *mit;

    validate_dataset(d);
    return d;
}

json dataset_to_json(const Dataset& d) {
    json j;
    j["sources"] = d.sources;
    json images = json::array();
    for (const auto& img : d.images) {
        json ji;
        ji["id"] = img.id;
        ji["width"] = img.width;
        ji["height"] = img.height;
        if (img.raster) ji["raster"] = *img.raster;
        json anns;
        for (const auto& set : img.annotations) {
            json list = json::array();
            for (const auto& p : set.annotations) list.push_back(point_to_json(p, true));
            anns[set.source] = std::move(list);
        }
        ji["annotations"] = std::move(anns);
        if (img.reference) {
            json ref = json::array();
            for (const auto& p : *img.reference) ref.push_back(point_to_json(p, false));
            ji["reference"] = std::move(ref);
        }
        images.push_back(std::move(ji));
    }
    j["images"] = std::move(images);
    if (!d.metadata.is_null()) j["metadata"] = d.metadata;
    return j;
}

std::string dataset_to_string(const Dataset& d) {
    return dataset_to_json(d).dump(2) + "\n";
}

Dataset load_dataset(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open dataset file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail("dataset file " + path.string() + ": " + e.what());
    }
    return dataset_from_json(j, strict);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    validate_dataset(d);
    const std::string bytes = dataset_to_string(d);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open output file: " + path.string());
    out << bytes;
    if (!out) fail("write failed: " + path.string());
}

}  // namespace annofuse
