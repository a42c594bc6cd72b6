#pragma once

#include "helea/config.hpp"
#include "helea/embedding.hpp"
#include "helea/entity_store.hpp"
#include "helea/error.hpp"
#include "helea/evaluation.hpp"
#include "helea/fusion.hpp"
#include "helea/hashing.hpp"
#include "helea/hn_pipeline.hpp"
#include "helea/http_embedding.hpp"
#include "helea/infonce.hpp"
#include "helea/ingest.hpp"
#include "helea/kg_model.hpp"
#include "helea/reranker.hpp"
#include "helea/retriever.hpp"
#include "helea/toy_encoder.hpp"
#include "helea/unicode.hpp"
