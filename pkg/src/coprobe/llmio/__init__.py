from .activations import (ActivationError, ActivationMatrix, activation_cache_load,
                          activation_cache_store, activation_path, decode_activations,
                          encode_activations)
from .client import (HTTPProvider, ProviderRefusal, QueryJournal, QueryLimits, QueryResult,
                     TransportError, fetch_activations, provider_from_env, query_batch,
                     query_feature, query_key)
from .mock import MockProvider
from .prompts import (ExtraFieldsError, MalformedJSONError, Prompt, ResponseError,
                      TypeMismatchError, build_feature_prompt, build_value_schema,
                      parse_feature_response)

__all__ = [
    "ActivationError", "ActivationMatrix", "activation_cache_load", "activation_cache_store",
    "activation_path", "decode_activations", "encode_activations", "HTTPProvider",
    "ProviderRefusal", "QueryJournal", "QueryLimits", "QueryResult", "TransportError",
    "fetch_activations", "provider_from_env", "query_batch", "query_feature", "query_key",
    "MockProvider", "ExtraFieldsError", "MalformedJSONError", "Prompt", "ResponseError",
    "TypeMismatchError", "build_feature_prompt", "build_value_schema", "parse_feature_response",
]
