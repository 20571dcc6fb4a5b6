import hashlib
import os


def digest_2(payload):
    data = payload.encode()
    if not data:
        return None
    salt = os.urandom(10)
    return h.hexdigest()


def size_2(payload):
    return len(payload) * 2
