#pragma once

// Entity lookup across both graphs and the JSON-lines entity store format:
// {"kg","id","raw_name","canonical_name","triples":[[relation, tail], ...]}

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "helea/error.hpp"
#include "helea/kg_model.hpp"

namespace helea {

inline nlohmann::ordered_json entity_to_json(const Entity& e) {
    nlohmann::ordered_json j;
    j["kg"] = to_string(e.kg);
    j["id"] = e.id;
    j["raw_name"] = e.raw_name;
    j["canonical_name"] = e.canonical_name;
    auto triples = nlohmann::ordered_json::array();
    for (const auto& t : e.triples) triples.push_back({t.relation, t.tail});
    j["triples"] = std::move(triples);
    return j;
}

inline Entity entity_from_json(const nlohmann::json& j) {
    std::vector<Triple> triples;
    for (const auto& t : j.at("triples")) {
        triples.push_back(Triple{t.at(0).get<std::string>(), t.at(1).get<std::string>()});
    }
    Entity e = make_entity(parse_kg_side(j.at("kg").get<std::string>()), j.at("id").get<std::string>(),
                           j.at("raw_name").get<std::string>(), std::move(triples));
    return e;
}

inline void write_entities(std::ostream& out, const std::vector<Entity>& entities) {
    for (const auto& e : entities) out << entity_to_json(e).dump() << '\n';
}

inline std::vector<Entity> read_entities(std::istream& in) {
    std::vector<Entity> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(entity_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("entity store line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

inline std::vector<Entity> read_entities_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open entity store: " + path);
    return read_entities(in);
}

inline void write_entities_file(const std::string& path, const std::vector<Entity>& entities) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write entity store: " + path);
    write_entities(out, entities);
}

// Owns the entities of both graphs with O(1) lookup by key.
class EntityStore {
public:
    EntityStore() = default;

    void add(Entity e) {
        EntityKey k = e.entity_key();
        if (index_.count(k)) throw DuplicateId("duplicate entity " + k.str());
        index_.emplace(std::move(k), entities_.size());
        entities_.push_back(std::move(e));
    }

    void add_all(std::vector<Entity> es) {
        for (auto& e : es) add(std::move(e));
    }

    const Entity* find(const EntityKey& k) const {
        auto it = index_.find(k);
        return it == index_.end() ? nullptr : &entities_[it->second];
    }

    const Entity& at(const EntityKey& k) const {
        const Entity* e = find(k);
        if (!e) throw InvalidArgument("unknown entity " + k.str());
        return *e;
    }

    bool contains(const EntityKey& k) const { return index_.count(k) != 0; }
    const std::vector<Entity>& entities() const { return entities_; }
    std::size_t size() const { return entities_.size(); }

private:
    std::vector<Entity> entities_;
    std::unordered_map<EntityKey, std::size_t, EntityKeyHash> index_;
};

} // namespace helea
