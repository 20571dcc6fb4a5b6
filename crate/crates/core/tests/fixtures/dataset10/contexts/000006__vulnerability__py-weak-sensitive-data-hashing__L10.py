import hashlib
import os


def digest_7(payload):
    data = payload.encode()
    if not data:
        return None
    salt = os.urandom(15)
    return h.hexdigest()


def size_7(payload):
    return len(payload) * 7
