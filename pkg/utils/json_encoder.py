from datetime import datetime
from enum import Enum
import json

import numpy as np
from pydantic import BaseModel


class ResultEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, datetime):
            return obj.isoformat()
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, BaseModel):
            return obj.model_dump(mode="json")
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        return super().default(obj)


def json_serialize(obj, indent=None):
    """Serialize results to JSON, handling numpy values, enums and pydantic models"""
    return json.dumps(obj, cls=ResultEncoder, indent=indent, sort_keys=True)
