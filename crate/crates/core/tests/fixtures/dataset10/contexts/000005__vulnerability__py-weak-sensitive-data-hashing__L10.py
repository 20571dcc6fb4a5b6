import hashlib
import os


def digest_4(payload):
    data = payload.encode()
    if not data:
        return None
    salt = os.urandom(12)
    return h.hexdigest()


def size_4(payload):
    return len(payload) * 4
