#include "attnav/scene_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "attnav/errors.hpp"

namespace attnav {

using nlohmann::json;

std::string scene_to_text(const Scene& scene) {
  json doc;
  doc["format_version"] = kSceneFormatVersion;
  doc["id"] = scene.id;
  doc["room_type"] = to_string(scene.room_type);
  doc["split"] = to_string(scene.split);
  doc["cell_size_m"] = scene.cell_size_m;
  json rows = json::array();
  for (int y = 0; y < scene.height; ++y) {
    std::string row;
    for (int x = 0; x < scene.width; ++x) row += scene.is_wall({x, y}) ? '#' : '.';
    rows.push_back(row);
  }
  doc["grid"] = rows;
  json objects = json::array();
  for (const ObjectInstance& o : scene.objects) {
    objects.push_back({{"class", to_string(o.cls)},
                       {"x", o.cell.x},
                       {"y", o.cell.y},
                       {"height_band", to_string(o.band)}});
  }
  doc["objects"] = objects;
  json absent = json::array();
  for (ObjectClass c : scene.absent) absent.push_back(to_string(c));
  doc["absent"] = absent;
  return doc.dump(2) + "\n";
}

Scene scene_from_text(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kSceneFormatVersion) {
      throw FormatError("unsupported scene format version");
    }
    Scene s;
    s.id = doc.at("id").get<std::string>();
    s.room_type = parse_room_type(doc.at("room_type").get<std::string>());
    s.split = parse_split(doc.at("split").get<std::string>());
    s.cell_size_m = doc.at("cell_size_m").get<double>();
    const auto& rows = doc.at("grid");
    s.height = static_cast<int>(rows.size());
    s.width = s.height ? static_cast<int>(rows[0].get<std::string>().size()) : 0;
    for (const auto& r : rows) {
      const std::string row = r.get<std::string>();
      if (static_cast<int>(row.size()) != s.width) throw FormatError("ragged grid in " + s.id);
      for (char ch : row) {
        if (ch != '.' && ch != '#') throw FormatError("bad grid character in " + s.id);
        s.walls.push_back(ch == '#' ? 1 : 0);
      }
    }
    for (const auto& o : doc.at("objects")) {
      ObjectInstance obj{parse_object_class(o.at("class").get<std::string>()),
                         {o.at("x").get<int>(), o.at("y").get<int>()},
                         parse_height_band(o.at("height_band").get<std::string>())};
      if (!s.in_bounds(obj.cell) || s.is_wall(obj.cell)) {
        throw FormatError("object outside free space in " + s.id);
      }
      s.objects.push_back(obj);
    }
    if (doc.contains("absent")) {
      for (const auto& c : doc.at("absent")) s.absent.push_back(parse_object_class(c.get<std::string>()));
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed scene document: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("malformed scene document: ") + e.what());
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Scene& s : corpus.scenes) {
    std::ofstream out(dir / (s.id + ".json"));
    if (!out) throw std::runtime_error("cannot write scene file in " + dir.string());
    out << scene_to_text(s);
  }
}

Corpus read_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    corpus.scenes.push_back(scene_from_text(buf.str()));
  }
  return corpus;
}

}  // namespace attnav
