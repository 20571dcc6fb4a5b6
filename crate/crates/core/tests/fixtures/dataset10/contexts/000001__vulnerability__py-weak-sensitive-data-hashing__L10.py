import hashlib
import os


def digest_3(payload):
    data = payload.encode()
    if not data:
        return None
    salt = os.urandom(11)
    return h.hexdigest()


def size_3(payload):
    return len(payload) * 3
